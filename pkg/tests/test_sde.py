from __future__ import annotations

import math

import numpy as np
import pytest
from oracles import euler_loop

from cmsfreeze import symflow
from cmsfreeze.chamber import ChamberPoint, RootSystemSpec, drift, in_chamber
from cmsfreeze.errors import ChamberError, DomainError
from cmsfreeze.sde import (
    FreezingRow,
    SdeConfig,
    freezing_deviation,
    loglog_slope,
    mean_square_rate,
    path_rng,
    simulate_path,
)

A2 = RootSystemSpec.A(2)
X0 = ChamberPoint([1.0, -1.0], A2)


def test_config_validation():
    for bad in (dict(beta=0.0), dict(beta=-1.0), dict(n_paths=0), dict(dt=0.0),
                dict(dt=math.inf), dict(scheme="milstein"), dict(seed=-1)):
        with pytest.raises(DomainError):
            SdeConfig(**bad)
    assert SdeConfig().sigma == 0.0
    assert SdeConfig(beta=4.0).sigma == 0.5
    assert SdeConfig().to_dict()["beta"] == "inf"


def test_path_streams_are_distinct_and_reproducible():
    a = path_rng(3, 0).normal(size=4)
    assert np.array_equal(a, path_rng(3, 0).normal(size=4))
    assert not np.array_equal(a, path_rng(3, 1).normal(size=4))
    assert not np.array_equal(a, path_rng(3, 0, stream=1).normal(size=4))
    assert not np.array_equal(a, path_rng(4, 0).normal(size=4))


def test_infinite_beta_is_explicit_euler():
    for x0, n_steps in ((X0, 500), (ChamberPoint([3.0, 1.0, 0.5], RootSystemSpec.B(3, 1.5)), 200)):
        dt = 1e-3
        traj = simulate_path(x0, [n_steps * dt], SdeConfig(dt=dt))
        ref = euler_loop(x0.coords, lambda x: drift(x, x0.system), dt, n_steps)
        np.testing.assert_allclose(traj.points[-1], ref, rtol=1e-12)


def test_euler_is_first_order_against_exact_flow():
    x0 = ChamberPoint([2.0, 0.5, -1.0], RootSystemSpec.A(3))
    exact = symflow.solve_trajectory(x0, [1.0]).points[-1]
    errs = [np.max(np.abs(simulate_path(x0, [1.0], SdeConfig(dt=dt)).points[-1] - exact))
            for dt in (1e-2, 1e-3)]
    assert 5 < errs[0] / errs[1] < 20


def test_simulate_path_sampling():
    cfg = SdeConfig(beta=50.0, dt=1e-3, seed=5)
    times = [0.0, 0.0105, 0.5]
    t1 = simulate_path(X0, times, cfg, path_index=2)
    t2 = simulate_path(X0, times, cfg, path_index=2)
    assert t1.times.tolist() == times
    np.testing.assert_array_equal(t1.points, t2.points)
    np.testing.assert_array_equal(t1.points[0], X0.coords)
    assert all(in_chamber(p, A2, strict=True) for p in t1.points)
    other = simulate_path(X0, times, cfg, path_index=3)
    assert not np.array_equal(t1.points[-1], other.points[-1])
    assert len(simulate_path(X0, [], cfg)) == 0


def test_simulate_path_rejects_bad_input():
    with pytest.raises(ChamberError):
        simulate_path(ChamberPoint([1.0, 1.0], A2), [1.0], SdeConfig())
    with pytest.raises(DomainError):
        simulate_path(X0, [0.5, 0.2], SdeConfig())


def test_results_do_not_depend_on_batching():
    cfg = SdeConfig(beta=20.0, n_paths=12, dt=1e-3, seed=9)
    a = mean_square_rate(X0, 0.2, cfg, chunk=5)
    b = mean_square_rate(X0, 0.2, cfg, chunk=10000)
    assert a == b
    ra = freezing_deviation(X0, 0.2, [20.0], cfg, chunk=4)
    rb = freezing_deviation(X0, 0.2, [20.0], cfg)
    assert ra == rb


def test_single_path_matches_simulate_path():
    cfg = SdeConfig(beta=30.0, n_paths=1, dt=1e-3, seed=2)
    ms = mean_square_rate(X0, 0.3, cfg)
    end = simulate_path(X0, [0.3], cfg).points[-1]
    assert ms.rate == pytest.approx((end @ end - X0.coords @ X0.coords) / 0.3, rel=1e-12)


def test_freezing_rows_and_reflections():
    x0 = ChamberPoint([1.0, 0.0, -1.0], RootSystemSpec.A(3))
    rows = freezing_deviation(x0, 0.5, [math.inf, 100.0, 10.0], SdeConfig(n_paths=200, dt=1e-3, seed=1))
    assert [r.beta for r in rows] == [10.0, 100.0, math.inf]
    assert rows[0].mean_dev > rows[1].mean_dev > rows[2].mean_dev
    assert rows[2].mean_dev < 1e-2  # deterministic Euler error only
    assert all(r.reflect_rate < 1e-3 and r.n_failed == 0 for r in rows)
    with pytest.raises(DomainError):
        freezing_deviation(x0, 0.5, [], SdeConfig())


def test_mean_square_small():
    # d E|X|^2 / dt = kappa + N/beta for every t
    x0 = ChamberPoint([1.5, 0.5, -0.5, -1.5], RootSystemSpec.A(4))
    res = mean_square_rate(x0, 0.5, SdeConfig(beta=5.0, n_paths=2000, dt=1e-3, seed=3))
    assert res.predicted == 12 + 4 / 5
    assert abs(res.z_score) < 4


def test_loglog_slope():
    rows = [FreezingRow(b, 3.0 * b ** -0.5, 0.0, 0.0, 1, 0) for b in (10.0, 100.0, 1000.0, math.inf)]
    assert loglog_slope(rows) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(DomainError):
        loglog_slope(rows[:1])
