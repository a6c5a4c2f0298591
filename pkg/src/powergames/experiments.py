"""Desk-scale experiments: utility-region reproduction and the gain-vs-load sweep.

Both experiments write delimited data plus a JSON metadata sidecar, and the
CLI report path renders matplotlib figures next to them.  All outputs are
deterministic functions of the scenario file, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .efficiency import EfficiencyFunction, PacketSuccess, equilibrium_sinr
from .errors import EmptyRegionError, ScenarioError
from .game import GameSpec, fair_powers, nash_powers, utilities
from .scenario import Scenario, SweepConfig, max_feasible_players
from .stochastic import (
    UtilityRegion,
    action_utilities,
    feasible_region,
    joint_actions,
    social_optimum,
    stationary_distribution,
)

__all__ = [
    "MarkedPoint",
    "RegionArtifacts",
    "run_region_experiment",
    "write_region_artifacts",
    "GainRow",
    "SweepCurve",
    "run_gain_sweep",
    "write_sweep_artifacts",
    "solver_metadata",
]


def solver_metadata() -> dict:
    return {
        "package_version": __version__,
        "root_relative_residual": 1e-10,
        "root_max_iterations": 200,
        "stationary_residual": 1e-12,
        "hull_membership_tol": 1e-9,
        "audit_gain_tol": 1e-9,
    }


# ---------------------------------------------------------------------------
# utility-region experiment
# ---------------------------------------------------------------------------


@dataclass
class MarkedPoint:
    """A highlighted utility vector with the per-state powers producing it."""

    label: str
    utilities: np.ndarray  # (K,) expected utility vector
    powers_by_state: np.ndarray  # (S, K)

    @property
    def welfare(self) -> float:
        return float(self.utilities.sum())


@dataclass
class RegionArtifacts:
    scenario_name: str
    region: UtilityRegion
    state_clouds: list[np.ndarray]  # per state, (A, K) utility vectors
    expected_nash: MarkedPoint
    expected_fair: MarkedPoint
    social_star: MarkedPoint
    star_rational: bool


def _expected_profile_point(spec, f, chain, maker, label) -> MarkedPoint:
    mu = stationary_distribution(chain)
    powers = []
    total = np.zeros(spec.players)
    for s in range(chain.num_states):
        prof = maker(spec, f, chain.states[s])
        powers.append(prof.powers)
        total += mu[s] * utilities(spec, f, chain.states[s], prof.powers)
    return MarkedPoint(label, total, np.array(powers))


def run_region_experiment(
    scenario: Scenario, method: str = "auto", budget: int | None = None
) -> RegionArtifacts:
    """Per-state utility clouds, the expected region, and the three marked points.

    Marked points are the expected one-shot Nash profile, the expected fair
    cooperative profile (both evaluated state by state, then averaged under
    the invariant measure), and the welfare-maximizing individually
    rational policy from the region enumeration.
    """
    if scenario.chain is None:
        raise ScenarioError("region experiment needs a markov [channel]")
    spec = scenario.spec
    if spec.grids is None:
        raise ScenarioError("region experiment needs a [grid] table")
    f = scenario.f
    chain = scenario.chain
    region = feasible_region(spec, f, chain, method=method, budget=budget)
    actions = joint_actions(spec)
    clouds = [
        action_utilities(spec, f, chain.states[s], actions)
        for s in range(chain.num_states)
    ]
    nash_pt = _expected_profile_point(spec, f, chain, nash_powers, "expected_nash")
    fair_pt = _expected_profile_point(spec, f, chain, fair_powers, "expected_fair")
    star_u, star_policy = social_optimum(region)
    star = MarkedPoint("social_star", star_u, star_policy.powers)
    return RegionArtifacts(
        scenario_name=scenario.name,
        region=region,
        state_clouds=clouds,
        expected_nash=nash_pt,
        expected_fair=fair_pt,
        social_star=star,
        star_rational=bool(region.rational_mask(star_u[None, :])[0]),
    )


def _marked_json(point: MarkedPoint, rational: bool | None = None) -> dict:
    out = {
        "utilities": [float(v) for v in point.utilities],
        "powers_by_state": [[float(p) for p in row] for row in point.powers_by_state],
        "welfare": point.welfare,
    }
    if rational is not None:
        out["individually_rational"] = rational
        out["folk_certified"] = rational
    return out


def write_region_artifacts(
    art: RegionArtifacts, scenario: Scenario, outdir, figures: bool = True
) -> list[Path]:
    """region.csv, state_regions.csv, points.json, metadata.json (+ region.png)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    region_csv = outdir / "region.csv"
    art.region.write_csv(region_csv)

    states_csv = outdir / "state_regions.csv"
    k = art.region.points.shape[1]
    with open(states_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state"] + [f"u{i + 1}" for i in range(k)])
        for s, cloud in enumerate(art.state_clouds):
            for row in cloud:
                writer.writerow([s] + [repr(float(v)) for v in row])

    points_json = outdir / "points.json"
    payload = {
        "scenario": art.scenario_name,
        "players": k,
        "stationary": [float(v) for v in art.region.stationary],
        "minmax": [float(v) for v in art.region.minmax],
        "marked": {
            "expected_nash": _marked_json(art.expected_nash),
            "expected_fair": _marked_json(art.expected_fair),
            "social_star": _marked_json(art.social_star, art.star_rational),
        },
        "welfare_order": [
            art.expected_nash.welfare,
            art.expected_fair.welfare,
            art.social_star.welfare,
        ],
    }
    points_json.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    meta = outdir / "metadata.json"
    meta.write_text(
        json.dumps(
            {
                "scenario_file": scenario.path.name,
                "scenario_hash": scenario.source_hash,
                "seed": scenario.seed,
                "region_method": art.region.method,
                "grid_sizes": [int(g.size) for g in scenario.spec.grids],
                "num_points": int(len(art.region.points)),
                "solver": solver_metadata(),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )

    written = [region_csv, states_csv, points_json, meta]
    if figures:
        from .plots import render_region

        written.append(render_region(art, outdir / "region.png"))
    return written


# ---------------------------------------------------------------------------
# gain-vs-load sweep
# ---------------------------------------------------------------------------


@dataclass
class GainRow:
    players: int
    alpha: float  # spectral load K/N
    w_nash: float
    w_fair: float
    w_social: float

    @property
    def gain_fair_pct(self) -> float:
        return 100.0 * (self.w_fair - self.w_nash) / self.w_nash

    @property
    def gain_social_pct(self) -> float:
        return 100.0 * (self.w_social - self.w_nash) / self.w_nash


@dataclass
class SweepCurve:
    block_length: int
    alpha_max: float  # non-saturation boundary 1/target + 1/N
    rows: list[GainRow]
    skipped: list[tuple[int, str]]


def _one_strong_state(players: int, strong: float, weak: float, who: int) -> np.ndarray:
    eta = np.full(players, weak)
    eta[who] = strong
    return eta


def _symmetric_social_welfare(
    spec: GameSpec,
    f: EfficiencyFunction,
    cfg: SweepConfig,
    extra_powers: np.ndarray,
) -> float:
    """Best expected welfare over symmetric state-feedback policies.

    One player is strong per state, uniformly; the policy plays power ``a``
    when strong and ``b`` when weak, searched over a log grid augmented
    with the Nash/fair powers.  Every player's expected utility equals
    welfare/K by symmetry, so individual rationality is welfare/K >= the
    max-power-punishment minmax value.
    """
    K, N = spec.players, spec.spreading
    noise, rate = spec.noise, spec.rate
    strong, weak = cfg.strong_gain, cfg.weak_gain
    cap = float(spec.max_power[0])
    grid = np.geomspace(cfg.min_power, cap, cfg.grid_points)
    grid = np.unique(np.concatenate([grid, extra_powers[extra_powers <= cap]]))

    a = grid[:, None]  # strong player's power
    b = grid[None, :]  # every weak player's power
    sinr_strong = strong * a / (noise + (K - 1) * weak * b / N)
    sinr_weak = weak * b / (noise + (strong * a + (K - 2) * weak * b) / N)
    welfare = rate * (
        np.asarray(f.value(sinr_strong)) / a
        + (K - 1) * np.asarray(f.value(sinr_weak)) / b
    )

    # Max-power punishment pins the minmax (utility falls with interference).
    i_strong = noise + (K - 1) * weak * cap / N
    i_weak = noise + (strong + (K - 2) * weak) * cap / N
    v_strong = (rate * np.asarray(f.value(strong * grid / i_strong)) / grid).max()
    v_weak = (rate * np.asarray(f.value(weak * grid / i_weak)) / grid).max()
    vbar = (v_strong + (K - 1) * v_weak) / K

    rational = welfare / K >= vbar
    if not rational.any():
        raise EmptyRegionError("no symmetric policy is individually rational")
    return float(welfare[rational].max())


def run_gain_sweep(scenario: Scenario) -> list[SweepCurve]:
    """Welfare gains of cooperation over the one-shot Nash profile, per load.

    For each block length and each feasible player count K: ``w_nash`` and
    ``w_fair`` average the per-state welfare of the closed-form profiles
    over the K one-strong-player states; ``w_social`` searches symmetric
    state-feedback policies for the best individually rational welfare.
    """
    if scenario.sweep is None:
        raise ScenarioError("scenario has no [sweep] table")
    cfg = scenario.sweep
    base = scenario.spec
    curves = []
    for m in cfg.block_lengths:
        f = PacketSuccess(m)
        target = equilibrium_sinr(f)
        alpha_max = 1.0 / target + 1.0 / cfg.spreading
        kmax = max_feasible_players(f, cfg.spreading)
        if cfg.players_max is not None:
            kmax = min(kmax, cfg.players_max)
        rows: list[GainRow] = []
        skipped: list[tuple[int, str]] = []
        for K in range(cfg.players_min, kmax + 1):
            spec = GameSpec(
                players=K,
                noise=base.noise,
                rate=base.rate,
                spreading=cfg.spreading,
                max_power=float(base.max_power[0]),
            )
            w_nash = 0.0
            w_fair = 0.0
            marked: list[float] = []
            all_saturated = True
            for who in range(K):
                eta = _one_strong_state(K, cfg.strong_gain, cfg.weak_gain, who)
                ne = nash_powers(spec, f, eta)
                op = fair_powers(spec, f, eta)
                all_saturated = all_saturated and ne.saturated.all()
                w_nash += utilities(spec, f, eta, ne.powers).sum() / K
                w_fair += utilities(spec, f, eta, op.powers).sum() / K
                if who == 0:
                    # Permutation symmetry: the power multiset is identical
                    # in every state, so state 0 carries all marked values.
                    marked = [float(p) for p in np.concatenate([ne.powers, op.powers])]
            if all_saturated:
                skipped.append((K, "one-shot Nash profile saturates every player"))
                continue
            w_social = _symmetric_social_welfare(
                spec, f, cfg, np.unique(np.array(marked))
            )
            rows.append(
                GainRow(K, K / cfg.spreading, float(w_nash), float(w_fair), float(w_social))
            )
        curves.append(SweepCurve(m, alpha_max, rows, skipped))
    return curves


def _curve_suffix(curves: list[SweepCurve], curve: SweepCurve) -> str:
    return "" if len(curves) == 1 else f"_m{curve.block_length}"


def write_sweep_artifacts(
    curves: list[SweepCurve], scenario: Scenario, outdir, figures: bool = True
) -> list[Path]:
    """gains[_mM].csv, welfare[_mM].csv, metadata.json (+ gains.png)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for curve in curves:
        suffix = _curve_suffix(curves, curve)
        gains_csv = outdir / f"gains{suffix}.csv"
        with open(gains_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "gainDRG", "gainSDRG"])
            for row in curve.rows:
                writer.writerow(
                    [
                        repr(float(row.alpha)),
                        repr(float(row.gain_fair_pct)),
                        repr(float(row.gain_social_pct)),
                    ]
                )
        welfare_csv = outdir / f"welfare{suffix}.csv"
        with open(welfare_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["players", "alpha", "wNE", "wDRG", "wSDRG"])
            for row in curve.rows:
                writer.writerow(
                    [
                        row.players,
                        repr(float(row.alpha)),
                        repr(float(row.w_nash)),
                        repr(float(row.w_fair)),
                        repr(float(row.w_social)),
                    ]
                )
        written.extend([gains_csv, welfare_csv])

    meta = outdir / "metadata.json"
    meta.write_text(
        json.dumps(
            {
                "scenario_file": scenario.path.name,
                "scenario_hash": scenario.source_hash,
                "seed": scenario.seed,
                "curves": [
                    {
                        "block_length": c.block_length,
                        "alpha_max": c.alpha_max,
                        "players": [r.players for r in c.rows],
                        "skipped": [{"players": k, "reason": r} for k, r in c.skipped],
                    }
                    for c in curves
                ],
                "restriction": "symmetric state-feedback policies, shared scalar power grid",
                "solver": solver_metadata(),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    written.append(meta)
    if figures:
        from .plots import render_gains

        written.append(render_gains(curves, outdir / "gains.png"))
    return written
