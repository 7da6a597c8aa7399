"""Euler-Maruyama Monte Carlo for the rescaled multivariate Bessel SDE

    dX = beta^(-1/2) dB + drift(X) dt

and its freezing (beta -> infinity) onto the deterministic flow.

Every path owns its random streams, derived from ``(seed, path_index)`` with a
counter-based Philox generator, so results do not depend on how paths are
batched.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import symflow
from .chamber import (
    SINGULAR_FLOOR,
    ChamberPoint,
    Kind,
    RootSystemSpec,
    Trajectory,
    drift_unchecked,
    sort_into_chamber,
)
from .errors import ChamberError, DomainError, SubstepExhaustedError

log = logging.getLogger(__name__)

MAX_HALVINGS = 40
MAX_SUBSTEPS = 100_000
_BLOCK_STEPS = 1000
_BLOCK_DRAWS = 2_000_000  # cap on normals held in memory per block


@dataclass(frozen=True)
class SdeConfig:
    beta: float = math.inf
    n_paths: int = 1
    dt: float = 1e-4
    seed: int = 0
    scheme: str = "euler_maruyama"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive (or inf)")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError("n_paths must be a positive integer")
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise DomainError("dt must be positive")
        if self.scheme != "euler_maruyama":
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must fit in 64 unsigned bits")

    @property
    def sigma(self) -> float:
        return 0.0 if math.isinf(self.beta) else 1.0 / math.sqrt(self.beta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta"] = "inf" if math.isinf(self.beta) else self.beta
        return d


def path_rng(seed: int, path_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one path; stream 0 drives the increments, 1 the bridges."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class _Stats:
    steps: int = 0
    substeps: int = 0
    reflections: int = 0


def _ok(x: np.ndarray, system: RootSystemSpec) -> np.ndarray:
    """Row-wise: inside the chamber with every facet gap above the singularity floor."""
    m = x[:, 0] - x[:, 1]
    for i in range(1, system.n - 1):
        m = np.minimum(m, x[:, i] - x[:, i + 1])
    if system.kind is Kind.B:
        m = np.minimum(m, x[:, -1])
    elif system.kind is Kind.D:
        m = np.minimum(m, x[:, -2] + x[:, -1])
    floor = SINGULAR_FLOOR * (1.0 + np.sqrt(np.einsum("ij,ij->i", x, x)))
    # NaN fails the comparison, so non-finite rows are rejected too
    with np.errstate(invalid="ignore"):
        return m > floor


def _refine(x, dw, h, sigma, system, bridge, stats: _Stats, depth: int = 0):
    """Advance one path over a step of length h with Brownian increment dw, halving on exit."""
    y = x + drift_unchecked(x, system) * h + sigma * dw
    if _ok(y[None, :], system)[0]:
        return y
    stats.substeps += 1
    if stats.substeps > MAX_SUBSTEPS:
        raise SubstepExhaustedError("substep budget exhausted")
    if depth >= MAX_HALVINGS:
        y = sort_into_chamber(y, system)
        stats.reflections += 1
        if not (_ok(y[None, :], system)[0]):
            raise SubstepExhaustedError(f"reflection did not restore an interior point: {y.tolist()}")
        return y
    if sigma == 0.0:
        dw1 = dw2 = dw
    else:
        # Brownian bridge midpoint given the increment over the full step
        dw1 = 0.5 * dw + 0.5 * math.sqrt(h) * bridge().standard_normal(len(x))
        dw2 = dw - dw1
    xm = _refine(x, dw1, 0.5 * h, sigma, system, bridge, stats, depth + 1)
    return _refine(xm, dw2, 0.5 * h, sigma, system, bridge, stats, depth + 1)


def _time_grid(t_end: float, dt: float, extra: Sequence[float] = ()) -> np.ndarray:
    n = int(math.floor(t_end / dt + 1e-9))
    grid = np.arange(n + 1) * dt
    grid = np.union1d(grid[grid < t_end], np.asarray(list(extra), dtype=float))
    return np.union1d(grid, [0.0, t_end])


def _run_paths(
    x0: np.ndarray,
    system: RootSystemSpec,
    grid: np.ndarray,
    cfg: SdeConfig,
    path_ids: np.ndarray,
    reference: np.ndarray | None = None,
    sample_idx: np.ndarray | None = None,
):
    """Simulate a batch of paths on a common grid.

    Returns final states, per-path sup-norm deviation from ``reference`` (if
    given), samples at grid indices ``sample_idx``, a failure mask and stats.
    """
    p = len(path_ids)
    n = system.n
    sigma = cfg.sigma
    x = np.tile(np.asarray(x0, dtype=float), (p, 1))
    steps = np.diff(grid)
    failed = np.zeros(p, dtype=bool)
    stats = _Stats()
    sup_dev = np.zeros(p)
    samples = None
    if sample_idx is not None:
        samples = np.empty((len(sample_idx), p, n))
        pos = {int(k): j for j, k in enumerate(sample_idx)}
        if 0 in pos:
            samples[pos[0]] = x
    rngs = [path_rng(cfg.seed, i, 0) for i in path_ids] if sigma > 0 else None
    bridges: dict[int, np.random.Generator] = {}

    def bridge_for(j):
        def get():
            if j not in bridges:
                bridges[j] = path_rng(cfg.seed, int(path_ids[j]), 1)
            return bridges[j]
        return get

    block = max(1, min(_BLOCK_STEPS, _BLOCK_DRAWS // max(p * n, 1)))
    for start in range(0, len(steps), block):
        hs = steps[start:start + block]
        if sigma > 0:
            z = np.stack([g.standard_normal((len(hs), n)) for g in rngs], axis=1)
            dws = z * np.sqrt(hs)[:, None, None]
        for s, h in enumerate(hs):
            k = start + s
            live = ~failed
            dw = dws[s] if sigma > 0 else 0.0
            prop = x + drift_unchecked(x, system) * h + sigma * dw
            good = _ok(prop, system) & live
            x[good] = prop[good]
            stats.steps += int(live.sum())
            for j in np.flatnonzero(live & ~good):
                try:
                    x[j] = _refine(x[j], dws[s, j] if sigma > 0 else np.zeros(n), h, sigma, system,
                                   bridge_for(j), stats)
                except SubstepExhaustedError as exc:
                    log.warning("path %d discarded: %s", path_ids[j], exc)
                    failed[j] = True
            if reference is not None:
                for i in range(n):
                    np.maximum(sup_dev, np.abs(x[:, i] - reference[k + 1, i]), out=sup_dev)
            if samples is not None and (k + 1) in pos:
                samples[pos[k + 1]] = x
    return x, sup_dev, samples, failed, stats


def _check_start(x0: ChamberPoint) -> None:
    if not x0.interior:
        raise ChamberError("SDE simulation needs a start in the open chamber")


def simulate_path(
    x0: ChamberPoint, times: Sequence[float], cfg: SdeConfig, path_index: int = 0
) -> Trajectory:
    """One Euler-Maruyama path sampled at ``times``.

    The path is stepped on the grid {k * dt} refined by the requested times.
    With ``beta = inf`` no noise is drawn and this is explicit Euler on the ODE.

    Raises
    ------
    SubstepExhaustedError
        If the boundary sub-stepping fails for this path.
    """
    _check_start(x0)
    times = np.asarray(list(times), dtype=float)
    if len(times) == 0:
        return Trajectory(times, np.empty((0, x0.n)), x0.system, "euler_maruyama", cfg.to_dict())
    if np.any(times < 0) or (len(times) > 1 and np.any(np.diff(times) <= 0)):
        raise DomainError("times must be nonnegative and strictly increasing")
    grid = _time_grid(float(times[-1]), cfg.dt, times)
    idx = np.searchsorted(grid, times)
    _, _, samples, failed, _ = _run_paths(
        x0.coords, x0.system, grid, cfg, np.array([path_index]), sample_idx=idx
    )
    if failed[0]:
        raise SubstepExhaustedError(f"path {path_index} could not be continued inside the chamber")
    return Trajectory(times, samples[:, 0, :], x0.system, "euler_maruyama", cfg.to_dict())


@dataclass(frozen=True)
class FreezingRow:
    beta: float
    mean_dev: float
    std_err: float
    reflect_rate: float
    n_used: int
    n_failed: int


def _run_all(x0, system, grid, cfg, reference=None, sample_idx=None, chunk: int = 10000):
    ids = np.arange(cfg.n_paths)
    devs, finals, fails = [], [], []
    samples = []
    total = _Stats()
    for lo in range(0, cfg.n_paths, chunk):
        part = ids[lo:lo + chunk]
        xf, dev, smp, failed, st = _run_paths(x0, system, grid, cfg, part, reference, sample_idx)
        devs.append(dev)
        finals.append(xf)
        fails.append(failed)
        if smp is not None:
            samples.append(smp)
        total.steps += st.steps
        total.substeps += st.substeps
        total.reflections += st.reflections
    smp = np.concatenate(samples, axis=1) if samples else None
    return np.concatenate(finals), np.concatenate(devs), smp, np.concatenate(fails), total


def freezing_deviation(
    x0: ChamberPoint,
    t_end: float,
    betas: Sequence[float],
    cfg: SdeConfig,
    chunk: int = 10000,
) -> list[FreezingRow]:
    """Mean over paths of sup_{t <= t_end} ||X_t - x(t)||_inf for each beta (sorted ascending).

    ``x(t)`` is the exact deterministic solution from :func:`symflow.solve_trajectory`.
    Discarded paths (sub-stepping failures) are excluded from the statistics.
    """
    _check_start(x0)
    if not betas:
        raise DomainError("betas must be nonempty")
    grid = _time_grid(float(t_end), cfg.dt)
    reference = symflow.solve_trajectory(x0, grid).points
    rows = []
    for beta in sorted(float(b) for b in betas):
        bcfg = SdeConfig(beta, cfg.n_paths, cfg.dt, cfg.seed, cfg.scheme)
        _, dev, _, failed, st = _run_all(x0.coords, x0.system, grid, bcfg, reference, chunk=chunk)
        used = dev[~failed]
        if len(used) == 0:
            raise SubstepExhaustedError(f"all paths failed for beta={beta}")
        se = float(np.std(used, ddof=1) / math.sqrt(len(used))) if len(used) > 1 else 0.0
        rate = st.reflections / max(st.steps, 1)
        log.info("beta=%g: %d substep events, %d reflections in %d steps", beta, st.substeps, st.reflections, st.steps)
        rows.append(FreezingRow(beta, float(np.mean(used)), se, rate, len(used), int(failed.sum())))
    return rows


@dataclass(frozen=True)
class MeanSquareResult:
    rate: float  # empirical (E||X_T||^2 - ||x0||^2) / T
    std_err: float
    predicted: float  # kappa + N / beta
    reflect_rate: float

    @property
    def z_score(self) -> float:
        if self.std_err == 0.0:
            return 0.0 if self.rate == self.predicted else math.inf
        return (self.rate - self.predicted) / self.std_err


def mean_square_rate(x0: ChamberPoint, t_end: float, cfg: SdeConfig, chunk: int = 10000) -> MeanSquareResult:
    """Empirical growth rate of E||X_t||^2, to compare with kappa + N/beta from Ito's formula."""
    _check_start(x0)
    grid = _time_grid(float(t_end), cfg.dt)
    finals, _, _, failed, st = _run_all(x0.coords, x0.system, grid, cfg, chunk=chunk)
    sq = np.sum(finals[~failed] ** 2, axis=1)
    r0 = float(np.dot(x0.coords, x0.coords))
    rate = (float(np.mean(sq)) - r0) / t_end
    se = float(np.std(sq, ddof=1) / math.sqrt(len(sq))) / t_end if len(sq) > 1 else 0.0
    noise = 0.0 if math.isinf(cfg.beta) else x0.n / cfg.beta
    return MeanSquareResult(rate, se, x0.system.growth_rate + noise, st.reflections / max(st.steps, 1))


def loglog_slope(rows: Sequence[FreezingRow]) -> float:
    """Least-squares slope of log(mean_dev) against log(beta) over finite betas."""
    pts = [(math.log(r.beta), math.log(r.mean_dev)) for r in rows if math.isfinite(r.beta)]
    if len(pts) < 2:
        raise DomainError("need at least two finite betas for a slope")
    xs, ys = np.array(pts).T
    return float(np.polyfit(xs, ys, 1)[0])
