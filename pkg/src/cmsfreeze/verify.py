"""Self-checks of the solvers: growth identities, cross-engine agreement,
exact leading coefficients and backward boundary-hitting times.

Each suite returns a :class:`SuiteResult`; the CLI prints them as a table and
a JSON report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import symflow
from .chamber import ChamberPoint, Kind, RootSystemSpec
from .integrator import IntegratorConfig, growth_defect, integrate


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metric: str
    value: float
    threshold: float
    detail: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "metric": self.metric,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
            **self.extra,
        }


def random_interior_start(system: RootSystemSpec, rng: np.random.Generator) -> ChamberPoint:
    """Random point of the open chamber, well away from its walls.

    Built from gaps drawn uniformly in [0.2, 1] and a random overall scale in
    [0.5, 2]; A-starts get a random shift, D-starts a random sign on x_N.
    """
    n = system.n
    gaps = rng.uniform(0.2, 1.0, n)
    if system.kind is Kind.A:
        x = np.concatenate([[0.0], -np.cumsum(gaps[1:])]) + rng.normal()
    else:
        x = np.cumsum(gaps)[::-1]
        if system.kind is Kind.D and rng.random() < 0.5:
            x[-1] = -x[-1]
    return ChamberPoint(x * rng.uniform(0.5, 2.0), system)


def growth_suite(
    system: RootSystemSpec,
    trials: int,
    rng: np.random.Generator,
    t_max: float = 10.0,
    threshold: float = 1e-9,
    cfg: IntegratorConfig | None = None,
) -> SuiteResult:
    """Relative defect of ||x(t)||^2 - ||x0||^2 - kappa t along both engines."""
    times = np.concatenate([[0.0], np.geomspace(1e-3, t_max, 12)])
    worst = 0.0
    for _ in range(trials):
        x0 = random_interior_start(system, rng)
        for traj in (symflow.solve_trajectory(x0, times), integrate(x0, times, cfg)):
            worst = max(worst, float(np.max(growth_defect(traj))))
    return SuiteResult(
        "growth", worst < threshold, "max relative defect", worst, threshold,
        f"{system.kind.value}_{system.n}, {trials} starts, t <= {t_max:g}",
    )


def cross_suite(
    n: int,
    trials: int,
    rng: np.random.Generator,
    t_max: float = 1.0,
    nus: Sequence[float] = (0.5, 1.0, 3.0),
    threshold: float = 1e-6,
    cfg: IntegratorConfig | None = None,
) -> SuiteResult:
    """sup-norm gap between the symmetric-coordinate solver and Runge-Kutta.

    Systems cycle through A, B (each nu in turn) and D.
    """
    systems = [RootSystemSpec.A(n)] + [RootSystemSpec.B(n, nu) for nu in nus]
    if n >= 2:
        systems.append(RootSystemSpec.D(n))
    cfg = cfg or IntegratorConfig(rel_tol=1e-10)
    times = np.linspace(0.0, t_max, 21)
    worst = 0.0
    for i in range(trials):
        system = systems[i % len(systems)]
        x0 = random_interior_start(system, rng)
        a = symflow.solve_trajectory(x0, times).points
        b = integrate(x0, times, cfg).points
        worst = max(worst, float(np.max(np.abs(a - b))))
    return SuiteResult(
        "cross", worst < threshold, "max sup-norm gap", worst, threshold,
        f"N={n}, {trials} starts, t in [0, {t_max:g}]",
    )


def expected_leading_a(n: int, l: int) -> Fraction:
    """(-1)^l N! / (2^l l! (N-2l)!)."""
    return Fraction((-1) ** l * math.factorial(n), 2 ** l * math.factorial(l) * math.factorial(n - 2 * l))


def expected_leading_b(n: int, nu: int, k: int) -> int:
    """2^k (N+nu-1)(N+nu-2)...(N+nu-k) * C(N, k)."""
    prod = 1
    for j in range(1, k + 1):
        prod *= n + nu - j
    return 2 ** k * prod * math.comb(n, k)


def leading_suite(n_max: int = 10, nus: Sequence[int] = (1, 2, 3)) -> SuiteResult:
    """Exact degrees and leading coefficients of the time polynomials on integer starts."""
    mismatches = []
    checked = 0
    for n in range(2, n_max + 1):
        # centred integer start: n-1, n-3, ..., -(n-1)
        xa = ChamberPoint(np.arange(n - 1, -n, -2, dtype=float), RootSystemSpec.A(n))
        pa = symflow.propagate(symflow.to_symmetric(xa, exact=True))
        for k in range(1, n + 1):
            checked += 1
            if pa.degree(k) > k // 2:
                mismatches.append(f"A_{n} e_{k}: degree {pa.degree(k)}")
            if k % 2 == 0 and pa.leading_coefficient(k) != expected_leading_a(n, k // 2):
                mismatches.append(f"A_{n} e_{k}: {pa.leading_coefficient(k)}")
        for nu in nus:
            xb = ChamberPoint(np.arange(n, 0, -1, dtype=float), RootSystemSpec.B(n, nu))
            pb = symflow.propagate(symflow.to_symmetric(xb, exact=True))
            for k in range(1, n + 1):
                checked += 1
                lead = pb.polys[k - 1][k] if len(pb.polys[k - 1]) > k else 0
                if pb.degree(k) != k or lead != expected_leading_b(n, nu, k):
                    mismatches.append(f"B_{n} nu={nu} e_{k}: {lead}")
    return SuiteResult(
        "leading", not mismatches, "mismatches", float(len(mismatches)), 0.0,
        f"{checked} coefficients, N <= {n_max}, nu in {list(nus)}",
        {"mismatches": mismatches[:20]},
    )


def backward_suite(
    rng: np.random.Generator,
    x0: ChamberPoint | None = None,
    trials: int = 20,
    n: int = 4,
    gap_threshold: float = 1e-6,
) -> SuiteResult:
    """t_0 lies in [bound, 0) and the state there sits on the boundary.

    With ``x0`` given only that start is checked, otherwise ``trials`` random
    A-starts of size ``n``.
    """
    starts = [x0] if x0 is not None else [random_interior_start(RootSystemSpec.A(n), rng) for _ in range(trials)]
    worst_gap = 0.0
    ok = True
    records = []
    for start in starts:
        t0, xb = symflow.backward_extension_time(start)
        bound = symflow.backward_bound(start)
        gap = symflow.min_gap(xb.coords, start.system)
        worst_gap = max(worst_gap, gap)
        ok &= bound <= t0 < 0.0 and gap < gap_threshold
        records.append({"t0": t0, "bound": bound, "min_gap": gap})
    detail = f"t0 = {records[0]['t0']:.10f}" if x0 is not None else f"{len(starts)} random A_{n} starts"
    return SuiteResult(
        "backward", bool(ok), "max min-gap at t0", worst_gap, gap_threshold, detail,
        {"records": records},
    )
