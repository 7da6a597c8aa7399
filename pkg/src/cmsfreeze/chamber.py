"""Root systems A_{N-1}, B_N, D_N: Weyl chambers, drift fields and weights.

Every ODE handled by this package has the form ``dx/dt = drift(x)`` where the
drift is half the gradient of the log of the (beta-normalised) weight

    A:  w(x) = prod_{i<j} (x_i - x_j)^2
    B:  w(x) = prod_{i<j} (x_i^2 - x_j^2)^2 * prod_i x_i^(2 nu)
    D:  w(x) = prod_{i<j} (x_i^2 - x_j^2)^2
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ChamberError, DimensionError, DomainError, SingularInputError

# relative floor below which a drift denominator counts as zero
SINGULAR_FLOOR = 1e-13


class Kind(str, enum.Enum):
    A = "A"
    B = "B"
    D = "D"


@dataclass(frozen=True)
class RootSystemSpec:
    """Which root system, how many particles, and the wall coupling ``nu`` (B only)."""

    kind: Kind
    n: int
    nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"particle count must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.kind in (Kind.A, Kind.D) and self.n < 2:
            raise DomainError(f"root system {self.kind.value} needs n >= 2")
        if self.kind is Kind.B:
            nu = float(self.nu)
            if not nu >= 0.0 or math.isinf(nu):
                raise DomainError(f"nu must be finite and >= 0, got {self.nu}")
            object.__setattr__(self, "nu", nu)
        else:
            object.__setattr__(self, "nu", 0.0)

    @classmethod
    def A(cls, n: int) -> "RootSystemSpec":
        return cls(Kind.A, n)

    @classmethod
    def B(cls, n: int, nu: float) -> "RootSystemSpec":
        return cls(Kind.B, n, nu)

    @classmethod
    def D(cls, n: int) -> "RootSystemSpec":
        return cls(Kind.D, n)

    @property
    def growth_rate(self) -> float:
        """Constant kappa with ||x(t)||^2 = ||x(0)||^2 + kappa * t."""
        n = self.n
        if self.kind is Kind.A:
            return float(n * (n - 1))
        if self.kind is Kind.B:
            return 2.0 * n * (n + self.nu - 1.0)
        return 2.0 * n * (n - 1)

    @property
    def squared(self) -> bool:
        """True for B and D, whose symmetric coordinates use the squares x_i^2."""
        return self.kind is not Kind.A

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "n": self.n, "nu": self.nu}


def _as_vector(x, system: RootSystemSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != system.n:
        raise DimensionError(f"expected a vector of length {system.n}, got shape {x.shape}")
    return x


def _facet_values(x: np.ndarray, system: RootSystemSpec) -> np.ndarray:
    """Signed distances to the hyperplanes bounding the chamber (>= 0 inside)."""
    gaps = (x[:-1] - x[1:]) / math.sqrt(2.0)
    if system.kind is Kind.A:
        return gaps
    if system.kind is Kind.B:
        return np.append(gaps, x[-1])
    return np.append(gaps, (x[-2] + x[-1]) / math.sqrt(2.0))


def in_chamber(x, system: RootSystemSpec, strict: bool = False) -> bool:
    """Whether ``x`` satisfies the (strict, if requested) chamber inequalities."""
    x = _as_vector(x, system)
    if not np.all(np.isfinite(x)):
        return False
    facets = _facet_values(x, system)
    if strict:
        return bool(np.all(facets > 0.0))
    return bool(np.all(facets >= 0.0))


@dataclass(frozen=True)
class ChamberPoint:
    coords: np.ndarray
    system: RootSystemSpec

    def __post_init__(self):
        x = _as_vector(self.coords, self.system).copy()
        x.setflags(write=False)
        object.__setattr__(self, "coords", x)
        if not in_chamber(x, self.system):
            raise ChamberError(
                f"{x.tolist()} is not in the closed Weyl chamber of {self.system.kind.value}_{self.system.n}"
            )

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def interior(self) -> bool:
        return in_chamber(self.coords, self.system, strict=True)

    def __len__(self) -> int:
        return self.system.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def sort_into_chamber(x: Sequence[float], system: RootSystemSpec) -> np.ndarray:
    """Map ``x`` to the chamber by a Weyl group element (sorting and sign flips).

    For D the sign of the smallest-magnitude coordinate is chosen so that the
    parity of negative entries is preserved; for B all signs are dropped.
    """
    x = _as_vector(x, system)
    if system.kind is Kind.A:
        return np.sort(x)[::-1].copy()
    y = np.sort(np.abs(x))[::-1].copy()
    if system.kind is Kind.D and np.count_nonzero(x < 0) % 2 == 1:
        y[-1] = -y[-1]
    return y


def boundary_distance(x: ChamberPoint) -> float:
    """Euclidean distance from ``x`` to the boundary of its chamber."""
    return float(max(np.min(_facet_values(x.coords, x.system)), 0.0))


def _min_denominator(x: np.ndarray, system: RootSystemSpec) -> float:
    n = system.n
    iu = np.triu_indices(n, 1)
    m = np.min(np.abs(x[:, None] - x[None, :])[iu]) if n > 1 else np.inf
    if system.kind is not Kind.A and n > 1:
        m = min(m, np.min(np.abs(x[:, None] + x[None, :])[iu]))
    if system.kind is Kind.B and system.nu != 0.0:
        m = min(m, np.min(np.abs(x)))
    return float(m)


def check_regular(x: np.ndarray, system: RootSystemSpec, floor: float = SINGULAR_FLOOR) -> None:
    m = _min_denominator(x, system)
    if not m >= floor * (1.0 + float(np.linalg.norm(x))):
        raise SingularInputError(
            f"drift is singular at {x.tolist()}: smallest denominator {m:.3e}"
        )


def drift_unchecked(x: np.ndarray, system: RootSystemSpec) -> np.ndarray:
    """Drift for a single point (shape (N,)) or a batch (shape (P, N)), no checks."""
    if x.ndim == 2 and x.shape[1] <= 12:
        return _drift_batch(x, system)
    diff = x[..., :, None] - x[..., None, :]
    n = x.shape[-1]
    eye = np.eye(n, dtype=bool)
    with np.errstate(divide="ignore"):
        out = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff)).sum(axis=-1)
        if system.kind is not Kind.A:
            s = x[..., :, None] + x[..., None, :]
            out = out + np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, s)).sum(axis=-1)
            if system.kind is Kind.B and system.nu != 0.0:
                out = out + system.nu / x
    return out


def _drift_batch(x: np.ndarray, system: RootSystemSpec) -> np.ndarray:
    # pair loop: cheaper than (P, N, N) temporaries for small N
    n = x.shape[1]
    out = np.zeros_like(x)
    with np.errstate(divide="ignore"):
        for i in range(n):
            for j in range(i + 1, n):
                inv = 1.0 / (x[:, i] - x[:, j])
                out[:, i] += inv
                out[:, j] -= inv
                if system.kind is not Kind.A:
                    inv = 1.0 / (x[:, i] + x[:, j])
                    out[:, i] += inv
                    out[:, j] += inv
        if system.kind is Kind.B and system.nu != 0.0:
            out += system.nu / x
    return out


def drift(x, system: RootSystemSpec, floor: float = SINGULAR_FLOOR) -> np.ndarray:
    """Right-hand side of the freezing-limit ODE, i.e. half the gradient of ``log_weight``.

    Raises
    ------
    SingularInputError
        If any denominator is smaller than ``floor * (1 + ||x||)``.
    """
    x = _as_vector(x, system)
    check_regular(x, system, floor)
    return drift_unchecked(x, system)


def log_weight(x, system: RootSystemSpec) -> float:
    """Natural log of the beta-normalised weight function at an interior point."""
    x = _as_vector(x, system)
    check_regular(x, system)
    iu = np.triu_indices(system.n, 1)
    if system.kind is Kind.A:
        pair = np.abs(x[:, None] - x[None, :])[iu]
    else:
        sq = x * x
        pair = np.abs(sq[:, None] - sq[None, :])[iu]
    total = 2.0 * float(np.sum(np.log(pair)))
    if system.kind is Kind.B and system.nu != 0.0:
        total += 2.0 * system.nu * float(np.sum(np.log(np.abs(x))))
    return total


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: ``points[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    points: np.ndarray
    system: RootSystemSpec
    method: str
    tolerances: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        points = np.asarray(self.points, dtype=float).reshape(len(times), self.system.n)
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise DomainError("trajectory times must be strictly increasing")
        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.times)

    def point(self, i: int) -> ChamberPoint:
        return ChamberPoint(self.points[i], self.system)
