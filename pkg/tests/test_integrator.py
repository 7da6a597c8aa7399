from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmsfreeze import symflow
from cmsfreeze.chamber import ChamberPoint, RootSystemSpec, in_chamber
from cmsfreeze.errors import ChamberError, DegenerateNuZeroError, DomainError
from cmsfreeze.integrator import (
    IntegratorConfig,
    growth_defect,
    integrate,
    profile_convergence,
    solve_hybrid,
)
from cmsfreeze.orthopoly import special_solution, stationary_profile
from cmsfreeze.verify import random_interior_start

A2 = RootSystemSpec.A(2)


def test_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(DomainError):
        IntegratorConfig(boundary_guard=1.0)
    assert IntegratorConfig().to_dict()["bootstrap_eps"] == 1e-8


def test_integrate_examples():
    t = integrate(ChamberPoint([1.0, -1.0], A2), [1.0])
    np.testing.assert_allclose(t.points[0], [math.sqrt(2), -math.sqrt(2)], rtol=1e-9)
    t = integrate(ChamberPoint([1.0], RootSystemSpec.B(1, 1.0)), [4.0])
    np.testing.assert_allclose(t.points[0], [3.0], rtol=1e-9)
    t = integrate(ChamberPoint([1.0, -1.0], A2), [])
    assert len(t) == 0 and t.method == "runge_kutta"


def test_integrate_rejects_boundary_start():
    with pytest.raises(ChamberError):
        integrate(ChamberPoint([1.0, 1.0], A2), [1.0])


def test_integrate_lands_on_requested_times():
    times = [0.0, 0.1, 0.123, 2.0]
    t = integrate(ChamberPoint([3.0, 1.0, -2.0], RootSystemSpec.A(3)), times)
    assert t.times.tolist() == times
    assert t.points[0].tolist() == [3.0, 1.0, -2.0]


def test_hybrid_examples():
    t = solve_hybrid(ChamberPoint([0.0, 0.0], A2), [0.5])
    np.testing.assert_allclose(t.points[0], [math.sqrt(0.5), -math.sqrt(0.5)], atol=1e-6)
    a3 = RootSystemSpec.A(3)
    x0 = ChamberPoint([1.0, 1.0, -2.0], a3)
    times = [0.0, 1e-9, 0.3, 1.0]
    h = solve_hybrid(x0, times)
    s = symflow.solve_trajectory(x0, times)
    np.testing.assert_allclose(h.points, s.points, atol=1e-6)
    assert all(in_chamber(p, a3, strict=True) for p in h.points[1:])
    d = solve_hybrid(ChamberPoint([2.0, 1.0, 0.0], RootSystemSpec.D(3)), [0.5, 2.0])
    assert np.all(d.points[:, 2] == 0.0)
    b = symflow.solve_trajectory(ChamberPoint([2.0, 1.0], RootSystemSpec.B(2, 2.0)), [0.5, 2.0])
    np.testing.assert_allclose(d.points[:, :2], b.points, rtol=1e-8)
    with pytest.raises(DegenerateNuZeroError):
        solve_hybrid(ChamberPoint([1.0, 0.0], RootSystemSpec.B(2, 0.0)), [1.0])


@settings(max_examples=15)
@given(st.integers(2, 7), st.sampled_from("ABD"), st.integers(0, 2**32 - 1))
def test_growth_and_ordering_along_integrate(n, kind, seed):
    system = RootSystemSpec(kind, n, 1.5 if kind == "B" else 0.0)
    x0 = random_interior_start(system, np.random.default_rng(seed))
    traj = integrate(x0, np.linspace(0, 5, 11))
    assert np.max(growth_defect(traj)) < 1e-9
    assert all(in_chamber(p, system, strict=True) for p in traj.points)


@settings(max_examples=15)
@given(st.integers(2, 8), st.sampled_from("ABD"), st.sampled_from([0.5, 1.0, 3.0]), st.integers(0, 2**32 - 1))
def test_cross_engine(n, kind, nu, seed):
    system = RootSystemSpec(kind, n, nu if kind == "B" else 0.0)
    x0 = random_interior_start(system, np.random.default_rng(seed))
    times = np.linspace(0, 1, 11)
    gap = np.abs(integrate(x0, times, IntegratorConfig(rel_tol=1e-10)).points
                 - symflow.solve_trajectory(x0, times).points)
    assert np.max(gap) < 1e-6


def test_profile_convergence_examples():
    s = special_solution(RootSystemSpec.A(4), 1.0, 0.0)
    traj = symflow.solve_trajectory(s, [0.0, 1.0, 10.0])
    assert max(d for _, d in profile_convergence(traj)) <= 1e-12
    traj = symflow.solve_trajectory(ChamberPoint([2.0, 1.0], A2), [1.0, 1e3])
    (_, d1), (_, d1000) = profile_convergence(traj)
    assert d1000 < d1
    x0 = ChamberPoint([0.8, 0.6], A2)
    traj = integrate(x0, [0.0])
    [(t, d)] = profile_convergence(traj)
    assert t == 0.0 and d == pytest.approx(np.linalg.norm(x0.coords - stationary_profile(A2)))


def test_profile_convergence_zero_state():
    traj = symflow.solve_trajectory(ChamberPoint([0.0, 0.0], A2), [0.0])
    with pytest.raises(DomainError):
        profile_convergence(traj)


def test_uncentred_translation_mode_decays_slowly():
    # for A the centre of mass is conserved, so its share of x/|x| decays only like t^(-1/2)
    x0 = ChamberPoint([1.5, 0.5], A2)
    ts = [1e2, 1e4]
    devs = [d for _, d in profile_convergence(symflow.solve_trajectory(x0, ts))]
    ratio = devs[0] / devs[1]
    assert ratio == pytest.approx(10.0, rel=0.05)
