"""Univariate polynomial utilities used by the symmetric-coordinate solver.

Coefficient lists are in *descending* powers unless a name says otherwise.
Exact routines work over ``fractions.Fraction``; floats are converted exactly.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NonRealRootsError


def elementary_symmetric(values) -> np.ndarray:
    """e_1..e_N of ``values`` by expanding prod (z - v_i) one factor at a time.

    Works on floats and on exact numbers (returns an object array then).
    """
    vals = list(values)
    exact = all(isinstance(v, (Fraction, int)) for v in vals)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    e = [one] + [zero] * len(vals)
    for k, v in enumerate(vals, start=1):
        for j in range(k, 0, -1):
            e[j] = e[j] + v * e[j - 1]
    return np.array(e[1:], dtype=object if exact else float)


def monic_from_symmetric(values) -> list:
    """Descending coefficients of z^N - e_1 z^{N-1} + e_2 z^{N-2} - ... ."""
    out = [1]
    for k, v in enumerate(values, start=1):
        out.append(-v if k % 2 else v)
    return out


def _to_fractions(coeffs) -> list[Fraction]:
    return [Fraction(c) if not isinstance(c, Fraction) else c for c in coeffs]


def _trim(p: list[Fraction]) -> list[Fraction]:
    i = 0
    while i < len(p) and p[i] == 0:
        i += 1
    return p[i:]


def _rem(f: list[Fraction], g: list[Fraction]) -> list[Fraction]:
    f = list(f)
    lg = g[0]
    while len(f) >= len(g) and f:
        q = f[0] / lg
        for i in range(len(g)):
            f[i] -= q * g[i]
        f = _trim(f)
    return f


def derivative(p: Sequence) -> list:
    n = len(p) - 1
    return [c * (n - i) for i, c in enumerate(p[:-1])]


def resultant(f: Sequence, g: Sequence) -> Fraction:
    """Exact resultant via the Euclidean remainder sequence over the rationals."""
    f = _trim(_to_fractions(f))
    g = _trim(_to_fractions(g))
    if not f or not g:
        return Fraction(0)
    result = Fraction(1)
    while True:
        m, n = len(f) - 1, len(g) - 1
        if n == 0:
            return result * g[0] ** m
        r = _rem(f, g)
        if not r:
            return Fraction(0)
        p = len(r) - 1
        if (m * n) % 2:
            result = -result
        result *= g[0] ** (m - p)
        f, g = g, r


def discriminant(coeffs: Sequence) -> Fraction:
    """Exact discriminant prod_{i<j} (r_i - r_j)^2 * lc^(2N-2) of a polynomial."""
    p = _trim(_to_fractions(coeffs))
    n = len(p) - 1
    if n < 1:
        return Fraction(0)
    if n == 1:
        return Fraction(1)
    res = resultant(p, derivative(p))
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * res / p[0]


def sturm_sequence(coeffs: Sequence) -> list[list[Fraction]]:
    p0 = _trim(_to_fractions(coeffs))
    seq = [p0]
    p1 = _trim(derivative(p0))
    while p1:
        seq.append(p1)
        r = _rem(seq[-2], seq[-1])
        p1 = [-c for c in r]
    return seq


def _horner(p: Sequence, x):
    acc = p[0] * 0
    for c in p:
        acc = acc * x + c
    return acc


def _sign_changes(signs: list[int]) -> int:
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_distinct_real_roots(coeffs: Sequence, lower: float | Fraction | None = None) -> int:
    """Number of distinct real roots in (lower, +inf), or on the whole line if ``lower`` is None.

    Sturm's theorem with exact rational arithmetic; multiple roots count once.
    """
    seq = sturm_sequence(coeffs)
    at_pos_inf = [1 if p[0] > 0 else -1 for p in seq]
    if lower is None:
        at_low = [(1 if p[0] > 0 else -1) * (-1 if (len(p) - 1) % 2 else 1) for p in seq]
    else:
        x = Fraction(lower)
        vals = [_horner(p, x) for p in seq]
        at_low = [(v > 0) - (v < 0) for v in vals]
    return _sign_changes(at_low) - _sign_changes(at_pos_inf)


def root_scale(values: Sequence[float]) -> float:
    """max_k |e_k|^(1/k): an upper-bound-sized scale for the roots."""
    s = 0.0
    for k, v in enumerate(values, start=1):
        if v != 0.0:
            s = max(s, abs(float(v)) ** (1.0 / k))
    return s


def real_roots_from_symmetric(
    values: Sequence[float],
    tau_im: float | None = None,
    newton_steps: int = 2,
) -> np.ndarray:
    """Real roots (descending) of the monic polynomial whose e_k are ``values``.

    Companion-matrix eigenvalues of the polynomial rescaled to unit root size
    (LAPACK balances the matrix), then guarded Newton polishing. If ``values``
    are exact (ints or Fractions) the Newton residuals are evaluated exactly,
    which recovers the roots to full double precision even when the float
    coefficients would be ill-conditioned.

    Raises
    ------
    NonRealRootsError
        If some root has ``|Im| > tau_im``; default ``tau_im = 1e-8 * (1 + scale)``.
    """
    exact_values = [v for v in values] if all(isinstance(v, (Fraction, int)) for v in values) else None
    values = np.asarray([float(v) for v in values])
    n = len(values)
    if n == 0:
        return np.empty(0)
    s = root_scale(values)
    if tau_im is None:
        tau_im = 1e-8 * (1.0 + s)
    if s == 0.0:
        return np.zeros(n)
    k = np.arange(1, n + 1)
    q = np.where(k % 2 == 1, -values, values) / s ** k  # coefficients of z^{n-k}
    comp = np.zeros((n, n))
    comp[0, :] = -q
    if n > 1:
        comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    eig = np.linalg.eigvals(comp) * s
    worst = float(np.max(np.abs(eig.imag)))
    if worst > tau_im:
        raise NonRealRootsError(
            f"polynomial has non-real roots (|Im| up to {worst:.3e} > {tau_im:.3e})"
        )
    roots = np.sort(eig.real)[::-1].copy()
    if newton_steps and n > 1:
        roots = _polish(roots, values, newton_steps)
        if exact_values is not None:
            roots = _polish_exact(roots, exact_values)
    return roots


def _polish(roots: np.ndarray, values: np.ndarray, steps: int) -> np.ndarray:
    coeffs = np.array(monic_from_symmetric(values), dtype=float)
    dcoeffs = np.array(derivative(list(coeffs)), dtype=float)
    gaps = np.abs(np.diff(roots))
    spacing = np.minimum(np.append(gaps, np.inf), np.insert(gaps, 0, np.inf))
    x = roots.copy()
    active = np.ones(len(x), dtype=bool)
    for _ in range(steps):
        p = np.polyval(coeffs, x)
        dp = np.polyval(dcoeffs, x)
        with np.errstate(all="ignore"):
            step = p / dp
        # clustered roots: Newton is unreliable there, keep the eigenvalue
        active &= np.isfinite(step) & (np.abs(step) <= 1e-2 * spacing)
        x_new = np.where(active, x - step, x)
        active &= np.abs(np.polyval(coeffs, x_new)) <= np.abs(p)
        x = np.where(active, x_new, x)
        if not active.any():
            break
    return np.sort(x)[::-1]


def _polish_exact(roots: np.ndarray, values: Sequence, max_steps: int = 8) -> np.ndarray:
    # exact residuals are trustworthy, so Newton may start further out than in _polish
    coeffs = [Fraction(c) for c in monic_from_symmetric(values)]
    dcoeffs = derivative(coeffs)
    gaps = np.abs(np.diff(roots))
    spacing = np.minimum(np.append(gaps, np.inf), np.insert(gaps, 0, np.inf))
    out = roots.copy()
    for i, r in enumerate(roots):
        x = float(r)
        for _ in range(max_steps):
            xf = Fraction(x)
            dp = _horner(dcoeffs, xf)
            if dp == 0:
                break
            step = float(_horner(coeffs, xf) / dp)
            if not abs(step) <= 0.25 * spacing[i]:
                break
            x_new = x - step
            if x_new == x:
                break
            x = x_new
        out[i] = x
    return np.sort(out)[::-1]
