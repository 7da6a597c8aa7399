"""Zeros of Hermite and Laguerre polynomials and the self-similar solutions built from them.

Zeros come from the eigenvalues of the symmetric tridiagonal Jacobi matrix of
the monic three-term recurrence (implicit QL with Wilkinson shifts), followed
by a few Newton steps on the recurrence itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chamber import ChamberPoint, Kind, RootSystemSpec
from .errors import CMSError, DomainError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ZeroSet:
    kind: str  # "hermite" or "laguerre"
    n: int
    alpha: float | None
    zeros: np.ndarray  # strictly decreasing

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float).copy()
        z.setflags(write=False)
        object.__setattr__(self, "zeros", z)


def tridiagonal_eigenvalues(diag, offdiag, max_iter: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric tridiagonal matrix, ascending.

    Implicit QL iteration with Wilkinson shifts; ``offdiag[i]`` couples rows
    ``i`` and ``i + 1``.
    """
    d = [float(v) for v in diag]
    n = len(d)
    e = [float(v) for v in offdiag] + [0.0]
    if len(e) != n:
        raise ValueError("offdiag must have length len(diag) - 1")
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise CMSError("tridiagonal QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def _hermite_recurrence(n: int):
    # monic: p_{k+1} = x p_k - (k/2) p_{k-1}
    a = np.zeros(n)
    b = np.arange(n, dtype=float) / 2.0
    return a, b


def _laguerre_recurrence(n: int, alpha: float):
    # monic: p_{k+1} = (x - (2k + alpha + 1)) p_k - k (k + alpha) p_{k-1}
    k = np.arange(n, dtype=float)
    return 2.0 * k + alpha + 1.0, k * (k + alpha)


def _monic_value_and_derivative(x: float, a: np.ndarray, b: np.ndarray):
    p_prev, p = 0.0, 1.0
    dp_prev, dp = 0.0, 0.0
    for k in range(len(a)):
        p_next = (x - a[k]) * p - b[k] * p_prev
        dp_next = p + (x - a[k]) * dp - b[k] * dp_prev
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def _zeros_from_recurrence(a: np.ndarray, b: np.ndarray, newton_steps: int = 3) -> np.ndarray:
    n = len(a)
    z = tridiagonal_eigenvalues(a, np.sqrt(b[1:]))[::-1].copy()
    if n == 1:
        return z
    gaps = np.abs(np.diff(z))
    spacing = np.minimum(np.append(gaps, np.inf), np.insert(gaps, 0, np.inf))
    for i in range(n):
        for _ in range(newton_steps):
            with np.errstate(all="ignore"):
                p, dp = _monic_value_and_derivative(z[i], a, b)
                step = p / dp
            # only trust small corrections; larger ones mean a bad derivative
            if not np.isfinite(step) or abs(step) > 1e-3 * spacing[i]:
                break
            z[i] -= step
            if abs(step) <= 2.0 * _EPS * abs(z[i]):
                break
    return z


def hermite_zeros(n: int) -> ZeroSet:
    """Zeros of the physicists' Hermite polynomial H_n, sorted descending."""
    if int(n) != n or n < 1:
        raise DomainError(f"Hermite degree must be >= 1, got {n}")
    n = int(n)
    z = _zeros_from_recurrence(*_hermite_recurrence(n))
    # enforce the exact symmetry z_i = -z_{n+1-i}
    z = 0.5 * (z - z[::-1])
    return ZeroSet("hermite", n, None, z)


def laguerre_zeros(n: int, alpha: float) -> ZeroSet:
    """Zeros of the generalised Laguerre polynomial L_n^(alpha), sorted descending.

    ``alpha = -1`` is handled through L_n^(-1)(x) = -(x/n) L_{n-1}^(1)(x), so the
    smallest zero is exactly 0.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"Laguerre degree must be >= 1, got {n}")
    n = int(n)
    alpha = float(alpha)
    if alpha == -1.0:
        rest = laguerre_zeros(n - 1, 1.0).zeros if n > 1 else np.empty(0)
        return ZeroSet("laguerre", n, -1.0, np.append(rest, 0.0))
    if not alpha > -1.0 or not math.isfinite(alpha):
        raise DomainError(f"Laguerre parameter must be > -1 or exactly -1, got {alpha}")
    z = _zeros_from_recurrence(*_laguerre_recurrence(n, alpha))
    return ZeroSet("laguerre", n, alpha, z)


def _pair_sums(z: np.ndarray) -> np.ndarray:
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, np.inf)
    if np.any(diff == 0.0):
        raise DomainError("zeros must be distinct")
    return (1.0 / diff).sum(axis=1)


def stieltjes_residual(zeros: ZeroSet, system: RootSystemSpec | None = None) -> np.ndarray:
    """Defect of the electrostatic equilibrium equations at ``zeros``.

    Hermite (A-case):   r_i = sum_{j!=i} 1/(z_i - z_j) - z_i
    Laguerre (B/D):     r_i = 2 z_i sum_{j!=i} 1/(z_i - z_j) + nu - z_i,  alpha = nu - 1

    Without ``system`` the root system is inferred from the zero set
    (Hermite -> A, Laguerre -> B with nu = alpha + 1). D pairs with alpha = -1.
    """
    z = zeros.zeros
    if zeros.kind == "hermite":
        if system is not None and system.kind is not Kind.A:
            raise DomainError("Hermite zeros pair with the A root system")
        return _pair_sums(z) - z
    if system is None or system.kind is Kind.B:
        nu = zeros.alpha + 1.0 if system is None else system.nu
    elif system.kind is Kind.D:
        nu = 0.0
    else:
        raise DomainError("Laguerre zeros pair with the B or D root system")
    if abs(nu - (zeros.alpha + 1.0)) > 1e-12 * (1.0 + abs(nu)):
        raise DomainError(f"Laguerre alpha={zeros.alpha} does not match nu={nu}")
    return 2.0 * z * _pair_sums(z) + nu - z


def profile_vector(system: RootSystemSpec) -> np.ndarray:
    """Unnormalised direction of the self-similar solution (z for A, y for B/D)."""
    if system.kind is Kind.A:
        return np.array(hermite_zeros(system.n).zeros)
    if system.kind is Kind.B:
        if not system.nu > 0.0:
            raise DomainError("the B-case self-similar solution needs nu > 0")
        z = laguerre_zeros(system.n, system.nu - 1.0).zeros
    else:
        z = laguerre_zeros(system.n, -1.0).zeros
    return np.sqrt(2.0 * z)


def special_solution(system: RootSystemSpec, c: float, t: float) -> ChamberPoint:
    """Self-similar solution at time ``t`` started from ``c`` times the profile vector.

    A: sqrt(2t + c^2) * z;  B, D: sqrt(t + c^2) * y.
    """
    c = float(c)
    t = float(t)
    if not c >= 0.0:
        raise DomainError(f"c must be nonnegative, got {c}")
    scale_sq = 2.0 * t + c * c if system.kind is Kind.A else t + c * c
    if c == 0.0 and t < 0.0 or c > 0.0 and not scale_sq > 0.0:
        raise DomainError(f"time {t} is before the start of the special solution with c={c}")
    return ChamberPoint(math.sqrt(scale_sq) * profile_vector(system), system)


def stationary_profile(system: RootSystemSpec) -> np.ndarray:
    """Unit vector that x(t)/||x(t)|| converges to as t -> infinity."""
    v = profile_vector(system)
    return v / np.linalg.norm(v)
