"""Acceptance suite: one test per release criterion, one line per outcome.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS/FAIL
line printed for every criterion alongside the pytest verdicts.
"""

import functools
import time
from pathlib import Path

import numpy as np
import pytest

from powergames import (
    GameSpec,
    LoadShape,
    MarkovChannel,
    NonIrreducibleError,
    PacketSuccess,
    RateExp,
    StationaryPolicy,
    audit_equilibrium,
    discount_threshold,
    equilibrium_sinr,
    expected_utility,
    fair_powers,
    fair_sinr,
    feasible_region,
    is_irreducible,
    load_scenario,
    max_feasible_players,
    nash_powers,
    run_gain_sweep,
    run_region_experiment,
    sinr_all,
    stationary_distribution,
    utilities,
    write_region_artifacts,
    write_sweep_artifacts,
)

from conftest import random_feasible_config

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def criterion(number, title):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {number:2d} FAIL: {title}")
                raise
            print(f"ACCEPTANCE {number:2d} PASS: {title}")

        return wrapper

    return decorate


@pytest.fixture(scope="module")
def feasible_batch():
    rng = np.random.default_rng(2024)
    return [random_feasible_config(rng) for _ in range(100)]


@pytest.fixture(scope="module")
def fig1():
    return load_scenario(SCENARIOS / "fig1.toml")


@pytest.fixture(scope="module")
def fig2():
    return load_scenario(SCENARIOS / "fig2.toml")


@criterion(1, "root-equation residuals and closed forms")
def test_criterion_01_root_residuals():
    start = time.perf_counter()
    shape = LoadShape(2, 2)
    a = shape.effective_interferers
    for m in (2, 10, 100):
        f = PacketSuccess(m)
        b = equilibrium_sinr(f)
        assert abs(b * f.deriv(b) - f.value(b)) <= 1e-10 * f.value(b)
        g = fair_sinr(f, shape)
        assert abs(g * (1 - a * g) * f.deriv(g) - f.value(g)) <= 1e-10 * f.value(g)
    for c in (0.5, 1.0, 3.0):
        f = RateExp(c)
        b = equilibrium_sinr(f)
        g = fair_sinr(f, shape)
        assert abs(b * f.deriv(b) - f.value(b)) <= 1e-10 * f.value(b)
        assert abs(g * (1 - a * g) * f.deriv(g) - f.value(g)) <= 1e-10 * f.value(g)
        assert abs(b - c) <= 1e-10 * c
        closed = c / (1.0 + a * c)
        assert abs(g - closed) <= 1e-10 * closed
    assert time.perf_counter() - start < 1.0


@criterion(2, "equilibrium SINR consistency on 100 random configurations")
def test_criterion_02_equilibrium_consistency(feasible_batch):
    start = time.perf_counter()
    for spec, f, eta in feasible_batch:
        ne = nash_powers(spec, f, eta)
        assert not ne.any_saturated
        target = equilibrium_sinr(f)
        assert np.allclose(sinr_all(spec, eta, ne.powers), target, rtol=1e-9, atol=0)
        op = fair_powers(spec, f, eta)
        fair = fair_sinr(f, spec.shape)
        assert np.allclose(sinr_all(spec, eta, op.powers), fair, rtol=1e-9, atol=0)
        received = op.powers * eta
        assert np.allclose(received, received[0], rtol=1e-9, atol=0)
    assert time.perf_counter() - start < 5.0


@criterion(3, "fair point Pareto-dominates the Nash profile")
def test_criterion_03_pareto_dominance(feasible_batch):
    for spec, f, eta in feasible_batch:
        u_ne = utilities(spec, f, eta, nash_powers(spec, f, eta).powers)
        u_op = utilities(spec, f, eta, fair_powers(spec, f, eta).powers)
        assert np.all(u_op >= u_ne * (1.0 - 1e-12))
        assert np.any(u_op > u_ne * (1.0 + 1e-9))


@criterion(4, "trigger plan survives a dense one-shot deviation audit")
def test_criterion_04_deviation_audit(feasible_batch):
    start = time.perf_counter()
    audited = 0
    for spec, f, eta in feasible_batch:
        if audited == 20:
            break
        threshold = discount_threshold(spec, f)
        if threshold <= 0:
            continue
        discount = min(0.9 * threshold, 0.99)
        audit = audit_equilibrium(spec, f, eta, discount, grid_points=10_000)
        assert audit.is_equilibrium
        assert audit.max_relative_gain <= 1e-9
        audited += 1
    assert audited == 20
    assert time.perf_counter() - start < 30.0


@criterion(5, "uniform two-state kernel: exact half/half invariant measure")
def test_criterion_05_stationary_distribution():
    chain = MarkovChannel([[7.0, 1.0], [1.0, 7.0]], [[0.5, 0.5], [0.5, 0.5]])
    mu = stationary_distribution(chain)
    assert mu[0] == 0.5 and mu[1] == 0.5
    identity = MarkovChannel([[7.0, 1.0], [1.0, 7.0]], [[1.0, 0.0], [0.0, 1.0]])
    assert not is_irreducible(identity)
    with pytest.raises(NonIrreducibleError):
        stationary_distribution(identity)


@criterion(6, "two-state region: marked points in hull, welfare ordering, star rational")
def test_criterion_06_region_reproduction(fig1):
    start = time.perf_counter()
    assert all(g.size <= 64 for g in fig1.spec.grids)
    art = run_region_experiment(fig1)
    for point in (art.expected_nash, art.expected_fair, art.social_star):
        assert art.region.contains(point.utilities, tol=1e-9)
    w_ne = art.expected_nash.welfare
    w_op = art.expected_fair.welfare
    w_star = art.social_star.welfare
    assert w_ne <= w_op <= w_star
    assert w_star > w_ne
    assert art.region.rational_mask().any()
    assert art.star_rational
    assert time.perf_counter() - start < 60.0


@criterion(7, "gain sweep: nonnegative, growing near saturation, correct boundary")
def test_criterion_07_gain_sweep(fig2):
    start = time.perf_counter()
    curves = run_gain_sweep(fig2)
    assert [c.block_length for c in curves] == [10, 100]
    for curve in curves:
        f = PacketSuccess(curve.block_length)
        target = equilibrium_sinr(f)
        spreading = fig2.sweep.spreading
        assert curve.alpha_max == pytest.approx(1.0 / target + 1.0 / spreading)
        assert not curve.skipped
        gains_fair = [r.gain_fair_pct for r in curve.rows]
        gains_social = [r.gain_social_pct for r in curve.rows]
        assert all(g >= 0.0 for g in gains_fair)
        assert all(g >= 0.0 for g in gains_social)
        q = len(curve.rows) - max(2, len(curve.rows) // 4)
        assert np.all(np.diff(gains_fair[q:]) > 0)
        assert np.all(np.diff(gains_social[q:]) > 0)
        # Growth near the boundary dwarfs the small-load gain.
        assert gains_fair[-1] >= 10.0 * gains_fair[0]
        # The last emitted K is the largest one below the boundary load.
        last = curve.rows[-1].players
        assert last == max_feasible_players(f, spreading)
        assert last / spreading < curve.alpha_max <= (last + 1) / spreading
    assert time.perf_counter() - start < 300.0


@criterion(8, "direct enumeration and per-state-hull paths build the same hull")
def test_criterion_08_region_oracle_equivalence():
    grids = [
        np.array([0.0, 0.1, 0.3, 0.6, 1.0, 2.0, 5.0, 10.0]),
        np.array([0.0, 0.25, 0.75, 1.5, 3.0, 10.0]),
    ]
    kernels = [((0.5, 0.5), (0.5, 0.5)), ((0.7, 0.3), (0.4, 0.6))]
    for grid in grids:
        for kernel in kernels:
            spec = GameSpec(
                players=2,
                noise=1.0,
                rate=1.0,
                spreading=2,
                max_power=float(grid[-1]),
                grids=(grid, grid),
            )
            chain = MarkovChannel([[7.0, 1.0], [1.0, 7.0]], kernel)
            f = PacketSuccess(2)
            h_enum = feasible_region(spec, f, chain, method="enumerate").hull
            h_mink = feasible_region(spec, f, chain, method="minkowski").hull
            a = np.array(sorted(map(tuple, h_enum)))
            b = np.array(sorted(map(tuple, h_mink)))
            assert a.shape == b.shape
            assert np.allclose(a, b, atol=1e-10, rtol=0)


@criterion(9, "stationary expectations match a million-stage simulated average")
def test_criterion_09_ergodic_consistency(fig1):
    spec, f, chain = fig1.spec, fig1.f, fig1.chain
    rng = np.random.default_rng(fig1.seed)
    policies = [
        StationaryPolicy(
            np.array(
                [
                    [spec.grids[i][rng.integers(1, spec.grids[i].size)] for i in range(2)]
                    for _ in range(chain.num_states)
                ]
            )
        )
        for _ in range(5)
    ]
    steps = 1_000_000
    cum = np.cumsum(chain.kernel, axis=1)
    draws = rng.random(steps)
    counts = np.zeros(chain.num_states)
    state = 0
    for t in range(steps):
        counts[state] += 1
        state = int(np.searchsorted(cum[state], draws[t]))
    freq = counts / steps
    for policy in policies:
        stage = np.array(
            [
                utilities(spec, f, chain.states[s], policy.powers[s])
                for s in range(chain.num_states)
            ]
        )
        simulated = freq @ stage
        exact = expected_utility(spec, f, chain, policy)
        assert np.allclose(simulated, exact, rtol=0.01)


@criterion(10, "region and sweep reruns are byte-identical")
def test_criterion_10_determinism(fig1, fig2, tmp_path):
    region_dirs = []
    for tag in ("r1", "r2"):
        art = run_region_experiment(fig1)
        out = tmp_path / tag
        write_region_artifacts(art, fig1, out, figures=False)
        region_dirs.append(out)
    for name in ("region.csv", "state_regions.csv", "points.json"):
        assert (region_dirs[0] / name).read_bytes() == (region_dirs[1] / name).read_bytes()

    sweep_dirs = []
    for tag in ("s1", "s2"):
        curves = run_gain_sweep(fig2)
        out = tmp_path / tag
        write_sweep_artifacts(curves, fig2, out, figures=False)
        sweep_dirs.append(out)
    for name in ("gains_m10.csv", "gains_m100.csv", "welfare_m10.csv", "welfare_m100.csv"):
        assert (sweep_dirs[0] / name).read_bytes() == (sweep_dirs[1] / name).read_bytes()
