"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own solvers: plain
bisection for scalar roots, brute-force scans for argmax checks, explicit
loops for utility recomputation.
"""

from __future__ import annotations

import numpy as np
import pytest

from powergames import GameSpec, LoadShape, PacketSuccess, RateExp, equilibrium_sinr


def bisect_oracle(g, lo, hi, iters=200):
    """Plain interval bisection; requires a sign change on [lo, hi]."""
    glo, ghi = g(lo), g(hi)
    assert glo * ghi < 0, "oracle bracket must straddle the root"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if glo * gm < 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def utility_oracle(spec, f, eta, powers):
    """Scalar-loop recomputation of every player's energy efficiency."""
    out = []
    for i in range(spec.players):
        if powers[i] == 0:
            out.append(0.0)
            continue
        interference = 0.0
        for j in range(spec.players):
            if j != i:
                interference += powers[j] * eta[j]
        x = powers[i] * eta[i] / (spec.noise + interference / spec.spreading)
        out.append(spec.rate * f.value(x) / powers[i])
    return np.array(out)


def random_feasible_config(rng):
    """A random non-saturated configuration with 2..5 players."""
    while True:
        players = int(rng.integers(2, 6))
        spreading = int(rng.integers(1, 9))
        if rng.random() < 0.5:
            f = PacketSuccess(int(rng.integers(2, 13)))
        else:
            f = RateExp(float(rng.uniform(0.3, 3.0)))
        shape = LoadShape(players, spreading)
        target = equilibrium_sinr(f)
        if shape.effective_interferers * target >= 0.95:
            continue
        spec = GameSpec(
            players=players,
            noise=float(rng.uniform(0.1, 10.0)),
            rate=float(rng.uniform(0.5, 4.0)),
            spreading=spreading,
            max_power=1e9,
        )
        eta = rng.uniform(0.2, 10.0, size=players)
        return spec, f, eta


@pytest.fixture
def rng():
    return np.random.default_rng(42)
