"""Adaptive Dormand-Prince 5(4) integration of the raw singular drift.

This engine never touches symmetric coordinates, which makes it an independent
check on :mod:`cmsfreeze.symflow`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import symflow
from .chamber import (
    ChamberPoint,
    RootSystemSpec,
    Trajectory,
    _facet_values,
    drift_unchecked,
)
from .errors import ChamberError, DomainError, StepUnderflowError
from .orthopoly import stationary_profile


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    boundary_guard: float = 0.5
    bootstrap_eps: float = 1e-8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "bootstrap_eps"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if not 0.0 < self.boundary_guard < 1.0:
            raise DomainError("boundary_guard must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


# Dormand-Prince tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_MIN_STEP = 1e-14


def _open_margin(x: np.ndarray, system: RootSystemSpec) -> float:
    # facet distances also bound |x_i + x_j| and |x_i| inside the B/D chambers
    return float(np.min(_facet_values(x, system))) if np.all(np.isfinite(x)) else -math.inf


def _attempt(y, f0, h, system):
    """One DP step; returns (y5, f_new, err_vec) or None if a stage left the open chamber."""
    k = [f0]
    for s in range(1, 7):
        ys = y + h * sum(a * kk for a, kk in zip(_A[s], k) if a != 0.0)
        if _open_margin(ys, system) <= 0.0:
            return None
        k.append(drift_unchecked(ys, system))
    y5 = ys  # stage 7 sits at the 5th-order solution (FSAL)
    err = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
    return y5, k[-1], err


def _integrate_from(
    y0: np.ndarray, t0: float, times: np.ndarray, system: RootSystemSpec, cfg: IntegratorConfig
) -> np.ndarray:
    out = np.empty((len(times), system.n))
    y = y0.astype(float).copy()
    t = t0
    f = drift_unchecked(y, system)
    h = None
    for i, target in enumerate(times):
        while t < target:
            margin = _open_margin(y, system)
            speed = float(np.linalg.norm(f))
            cap = min(cfg.max_step, target - t)
            if speed > 0:
                cap = min(cap, cfg.boundary_guard * margin / speed)
            h = min(cap, 1e-4) if h is None else min(h, cap)
            if h < _MIN_STEP * max(1.0, abs(t)):
                raise StepUnderflowError(f"step size {h:.3e} underflow at t={t}")
            trial = _attempt(y, f, h, system)
            if trial is None:
                h *= 0.5
                continue
            y_new, f_new, err_vec = trial
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if err <= 1.0 and _open_margin(y_new, system) > 0.0:
                # land exactly on the output time to avoid round-off drift
                t = target if target - t - h <= 1e-15 * max(1.0, abs(target)) else t + h
                y, f = y_new, f_new
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h *= factor
            else:
                h *= max(0.2, 0.9 * err ** -0.25) if math.isfinite(err) and err > 1.0 else 0.5
        out[i] = y
    return out


def _grid(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(list(times), dtype=float).reshape(-1)
    if len(times) > 1 and not np.all(np.diff(times) > 0):
        raise DomainError("times must be strictly increasing")
    return times


def integrate(
    x0: ChamberPoint,
    times: Sequence[float],
    cfg: IntegratorConfig | None = None,
    t_start: float = 0.0,
) -> Trajectory:
    """Adaptive Runge-Kutta solution from an interior start, sampled at ``times``.

    Raises
    ------
    ChamberError
        ``x0`` is on the boundary (use :func:`solve_hybrid`).
    StepUnderflowError
        The controller asked for a step below 1e-14.
    """
    cfg = cfg or IntegratorConfig()
    times = _grid(times)
    if not x0.interior:
        raise ChamberError("integrate needs a start in the open chamber; use solve_hybrid")
    if len(times) and times[0] < t_start:
        raise DomainError("times must not precede the start time")
    points = _integrate_from(x0.coords, t_start, times, x0.system, cfg)
    return Trajectory(times, points, x0.system, "runge_kutta", cfg.to_dict())


def solve_hybrid(x0: ChamberPoint, times: Sequence[float], cfg: IntegratorConfig | None = None) -> Trajectory:
    """Solution from anywhere in the closed chamber.

    Boundary starts are carried to ``t = bootstrap_eps`` by the exact
    symmetric-coordinate solver and continued by :func:`integrate`.
    """
    cfg = cfg or IntegratorConfig()
    times = _grid(times)
    symflow._check_start(x0)
    if x0.interior:
        traj = integrate(x0, times, cfg)
        return Trajectory(traj.times, traj.points, x0.system, "hybrid", cfg.to_dict())
    eps = cfg.bootstrap_eps
    early = times[times <= eps]
    late = times[times > eps]
    seed_times = np.unique(np.append(early, eps))
    seeded = symflow.solve_trajectory(x0, seed_times)
    points = [seeded.points[np.searchsorted(seed_times, t)] for t in early]
    if len(late):
        x_eps = ChamberPoint(seeded.points[-1], x0.system)
        points.extend(_integrate_from(x_eps.coords, eps, late, x0.system, cfg))
    return Trajectory(times, np.array(points).reshape(len(times), x0.system.n), x0.system, "hybrid", cfg.to_dict())


def profile_convergence(traj: Trajectory) -> list[tuple[float, float]]:
    """Distance of x(t)/||x(t)|| from the stationary profile at every sample."""
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    profile = stationary_profile(traj.system)
    out = []
    for t, x in zip(traj.times, traj.points):
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise DomainError(f"zero state at t={t}; the direction is undefined")
        out.append((float(t), float(np.linalg.norm(x / r - profile))))
    return out


def growth_defect(traj: Trajectory) -> np.ndarray:
    """|‖x(t)‖² − ‖x(t_0)‖² − κ (t − t_0)| / (1 + ‖x(t)‖²) along a trajectory."""
    kappa = traj.system.growth_rate
    sq = np.sum(traj.points ** 2, axis=1)
    return np.abs(sq - sq[0] - kappa * (traj.times - traj.times[0])) / (1.0 + sq)

