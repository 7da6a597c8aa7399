"""Exact solutions in (squared) elementary symmetric coordinates.

In the coordinates e_k(x) (A) or e_k(x_1^2, ..., x_N^2) (B, D) the singular ODE
becomes a triangular linear system with constant coefficients,

    A:    e_1' = 0,            e_k' = -(N-k+2)(N-k+1)/2 * e_{k-2}
    B:    e~_1' = 2N(N+nu-1),  e~_k' = 2(N-k+1)(N-k+nu)  * e~_{k-1}
    D:    the B recursion with nu = 0 (so e~_N is conserved)

whose solution is a tuple of polynomials in t. Positions are recovered as the
ordered real roots of the associated monic polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import polyalg
from .chamber import ChamberPoint, Kind, RootSystemSpec, Trajectory, in_chamber
from .errors import (
    BracketError,
    ChamberError,
    DegenerateNuZeroError,
    DomainError,
    NegativeSquareError,
)


@dataclass(frozen=True)
class SymmetricState:
    """``values[k-1]`` is e_k (A) or e~_k (B, D); ``sign_last`` is sign(x_N) for D, else None."""

    values: np.ndarray
    system: RootSystemSpec
    sign_last: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != object:
            v = v.astype(float)
        if v.shape != (self.system.n,):
            raise DomainError(f"expected {self.system.n} symmetric coordinates, got shape {v.shape}")
        object.__setattr__(self, "values", v)
        if self.system.kind is Kind.D:
            if self.sign_last not in (-1, 0, 1):
                raise DomainError("D-case symmetric state needs sign_last in {-1, 0, 1}")
            if (self.sign_last == 0) != (v[-1] == 0):
                raise DomainError("sign_last must be 0 exactly when e~_N = 0")
        elif self.sign_last is not None:
            raise DomainError("sign_last is only meaningful for the D root system")

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def monic_coefficients(self) -> list:
        return polyalg.monic_from_symmetric(self.values)


@dataclass(frozen=True)
class TimePolynomialSet:
    """``polys[k-1]`` holds ascending coefficients of t -> e_k(x(t))."""

    polys: tuple
    system: RootSystemSpec
    sign_last: int | None = None

    def degree(self, k: int) -> int:
        """Actual degree of the k-th polynomial (-1 for the zero polynomial)."""
        c = self.polys[k - 1]
        nz = [i for i, v in enumerate(c) if v != 0]
        return nz[-1] if nz else -1

    def leading_coefficient(self, k: int):
        d = self.degree(k)
        return self.polys[k - 1][d] if d >= 0 else 0


def to_symmetric(x: ChamberPoint, exact: bool = False) -> SymmetricState:
    """Image of ``x`` under the (squared) elementary symmetric map.

    With ``exact=True`` the coordinates are converted to Fractions first, so
    the result is exact for any float input.
    """
    coords = [Fraction(float(v)) for v in x.coords] if exact else x.coords.astype(float)
    if x.system.squared:
        coords = [c * c for c in coords]
    values = polyalg.elementary_symmetric(coords)
    sign = None
    if x.system.kind is Kind.D:
        sign = int(np.sign(x.coords[-1]))
    return SymmetricState(values, x.system, sign)


def _clamp_tol(values: np.ndarray) -> float:
    return 1e-10 * (1.0 + polyalg.root_scale(values))


def from_symmetric(s: SymmetricState, tau_im: float | None = None) -> ChamberPoint:
    """The chamber point whose symmetric image is ``s``.

    Raises
    ------
    NonRealRootsError
        If the associated polynomial has a root with imaginary part above ``tau_im``.
    NegativeSquareError
        B/D only: a squared coordinate is below ``-tau`` (see ``_clamp_tol``).
    """
    # exact states keep their Fractions so the root polish can use exact residuals
    raw = list(s.values) if s.exact else np.asarray(s.values, dtype=float)
    values = np.asarray(s.values, dtype=float)
    system = s.system
    if system.kind is Kind.A:
        roots = polyalg.real_roots_from_symmetric(raw, tau_im)
        return ChamberPoint(roots, system)
    if system.kind is Kind.D and s.sign_last == 0:
        # e~_N = 0: one squared coordinate is exactly zero, deflate it
        u = np.append(polyalg.real_roots_from_symmetric(raw[:-1], tau_im), 0.0)
    else:
        u = polyalg.real_roots_from_symmetric(raw, tau_im)
    tau = _clamp_tol(values)
    if np.any(u < -tau):
        raise NegativeSquareError(f"squared coordinate {u.min():.3e} is negative beyond tolerance {tau:.1e}")
    x = np.sqrt(np.clip(u, 0.0, None))
    if system.kind is Kind.D and s.sign_last == -1:
        x[-1] = -x[-1]
    return ChamberPoint(x, system)


def _antiderivative(coeffs: list, constant) -> list:
    return [constant] + [c / (i + 1) for i, c in enumerate(coeffs)]


def propagate(s0: SymmetricState) -> TimePolynomialSet:
    """Exact polynomial-in-t solution of the triangular linear system started at ``s0``.

    Arithmetic is exact (Fractions) when ``s0`` is exact, double precision otherwise.
    """
    system = s0.system
    n = system.n
    exact = s0.exact
    one = Fraction(1) if exact else 1.0
    nu = Fraction(system.nu) if exact else system.nu
    polys: list[list] = [[one]]  # index 0 holds e_0 = 1
    for k in range(1, n + 1):
        v0 = s0.values[k - 1]
        if system.kind is Kind.A:
            rate = -Fraction((n - k + 2) * (n - k + 1), 2) if exact else -0.5 * (n - k + 2) * (n - k + 1)
            source = polys[k - 2] if k >= 2 else []
        else:
            if system.kind is Kind.D:
                rate = 2 * (n - k + 1) * (n - k) * one
            else:
                rate = 2 * (n - k + 1) * (n - k + nu)
            source = polys[k - 1]
        polys.append(_antiderivative([rate * c for c in source], v0))
    return TimePolynomialSet(tuple(tuple(p) for p in polys[1:]), system, s0.sign_last)


def _horner_ascending(coeffs: Sequence, t):
    acc = coeffs[-1] * 0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def evaluate_flow(p: TimePolynomialSet, t) -> SymmetricState:
    """Symmetric state at time ``t`` (exact if both the set and ``t`` are exact)."""
    exact = isinstance(t, (Fraction, int)) and any(isinstance(c, Fraction) for c in p.polys[0])
    if exact:
        values = np.array([_horner_ascending(c, Fraction(t)) for c in p.polys], dtype=object)
    else:
        t = float(t)
        values = np.array([float(_horner_ascending([float(v) for v in c], t)) for c in p.polys])
    return SymmetricState(values, p.system, p.sign_last)


def _check_start(x0: ChamberPoint) -> None:
    system = x0.system
    if system.kind is Kind.B and system.nu == 0.0 and x0.coords[-1] == 0.0:
        raise DegenerateNuZeroError(
            "B root system with nu = 0 and x_N(0) = 0: no solution stays in the open chamber for t > 0"
        )


DEFAULT_TOLERANCES = {"tau_im_rel": 1e-8, "clamp_rel": 1e-10}


def solve_trajectory(x0: ChamberPoint, times: Sequence[float], center: bool = True) -> Trajectory:
    """Solution through ``x0`` sampled at ``times`` (all >= 0, strictly increasing).

    Works from any point of the closed chamber. Every sample with t > 0 is
    checked to lie in the open chamber.

    Raises
    ------
    DegenerateNuZeroError
        B with nu = 0 started with x_N = 0.
    ChamberError
        A computed sample at t > 0 is not strictly inside the chamber.
    """
    _check_start(x0)
    system = x0.system
    times = np.asarray(list(times), dtype=float)
    if np.any(times < 0):
        raise DomainError("solve_trajectory only runs forward in time (t >= 0)")
    shift = 0.0
    start = x0
    if center and system.kind is Kind.A:
        shift = float(np.mean(x0.coords))
        start = ChamberPoint(sort_desc(x0.coords - shift), system)
    flow = propagate(to_symmetric(start))
    points = np.empty((len(times), system.n))
    for i, t in enumerate(times):
        if t == 0.0:
            points[i] = x0.coords
            continue
        x = from_symmetric(evaluate_flow(flow, t)).coords + shift
        if not in_chamber(x, system, strict=True):
            raise ChamberError(f"solution at t={t!r} is not in the open chamber: {x.tolist()}")
        points[i] = x
    return Trajectory(times, points, system, "symmetric", dict(DEFAULT_TOLERANCES))


def sort_desc(x: np.ndarray) -> np.ndarray:
    return np.sort(x)[::-1].copy()


def discriminant(s: SymmetricState) -> float:
    """Discriminant of the monic polynomial attached to ``s`` (in the squared variable for B/D).

    Evaluated exactly from the rational values of the coefficients with the
    Euclidean resultant of P and P'; returned as a float.
    """
    return float(polyalg.discriminant(s.monic_coefficients()))


def _open_image(s: SymmetricState) -> bool:
    """Whether ``s`` is the image of an open-chamber point (exact Sturm counts)."""
    coeffs = s.monic_coefficients()
    n = s.system.n
    if s.system.kind is Kind.A:
        return polyalg.count_distinct_real_roots(coeffs) == n
    if s.system.kind is Kind.D and s.sign_last == 0:
        if n == 1:
            return False
        return polyalg.count_distinct_real_roots(coeffs[:-1], lower=0) == n - 1
    if coeffs[-1] == 0:
        return False
    return polyalg.count_distinct_real_roots(coeffs, lower=0) == n


def backward_bound(x0: ChamberPoint) -> float:
    """Lower bound for the backward boundary-hitting time from the growth identity."""
    system = x0.system
    x = x0.coords
    if system.kind is Kind.A:
        x = x - np.mean(x)
    kappa = system.growth_rate
    if kappa == 0.0:
        raise DomainError("solution is stationary; it never reaches the boundary backwards")
    return -float(np.dot(x, x)) / kappa


def backward_extension_time(
    x0: ChamberPoint, max_iter: int = 80, xtol: float = 0.0
) -> tuple[float, ChamberPoint]:
    """Time t_0 < 0 at which the solution through interior ``x0``, run backwards, hits the boundary.

    Bisection on [bound, 0] for the first time the propagated state belongs to
    the image of the open chamber (decided exactly with Sturm sequences). The
    default ``xtol = 0`` bisects down to floating-point resolution.

    Returns
    -------
    (t0, x(t0))
        ``t0`` is the last bisection point on the interior side; ``x(t0)`` is
        the boundary point recovered from it.
    """
    system = x0.system
    if not x0.interior:
        raise ChamberError("backward extension needs a start in the open chamber")
    shift = float(np.mean(x0.coords)) if system.kind is Kind.A else 0.0
    start = ChamberPoint(sort_desc(x0.coords - shift), system) if shift else x0
    flow = propagate(to_symmetric(start))
    lo = backward_bound(x0)
    hi = 0.0
    if _open_image(evaluate_flow(flow, lo)) or not _open_image(evaluate_flow(flow, hi)):
        raise BracketError(f"[{lo}, 0] does not bracket the boundary-hitting time")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        if _open_image(evaluate_flow(flow, mid)):
            hi = mid
        else:
            lo = mid
    s = evaluate_flow(flow, hi)
    scale = polyalg.root_scale(np.asarray(s.values, dtype=float))
    # near a multiple root the eigenvalues split by ~sqrt(eps); accept that
    x = from_symmetric(s, tau_im=1e-5 * (1.0 + scale)).coords + shift
    return hi, ChamberPoint(x, system)


def min_gap(x: np.ndarray, system: RootSystemSpec) -> float:
    """Smallest chamber facet value: min over the defining inequalities of x."""
    x = np.asarray(x, dtype=float)
    gaps = list(x[:-1] - x[1:])
    if system.kind is Kind.B:
        gaps.append(x[-1])
    elif system.kind is Kind.D:
        gaps.append(x[-2] + x[-1])
    return float(min(gaps)) if gaps else math.inf
