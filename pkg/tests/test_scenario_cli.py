"""Scenario loading, experiment artifacts, and the CLI surface."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from powergames import (
    PacketSuccess,
    ScenarioError,
    load_scenario,
    max_feasible_players,
    run_gain_sweep,
    run_region_experiment,
    utilities,
    write_region_artifacts,
    write_sweep_artifacts,
)
from powergames.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL_REGION = """
name = "small-region"
seed = 1

[game]
players = 2
noise = 1.0
rate = 1.0
spreading = 2
max_power = 10.0

[efficiency]
kind = "packet-success"
block_length = 2

[channel]
states = [[7.0, 1.0], [1.0, 7.0]]
kernel = [[0.5, 0.5], [0.5, 0.5]]

[grid]
points = 6
min_power = 0.05

[repeated]
discounts = [0.3, 0.05]
"""

SMALL_SWEEP = """
name = "small-sweep"
seed = 1

[game]
players = 2
noise = 1.0
max_power = 1e6

[efficiency]
kind = "packet-success"
block_length = 2

[sweep]
spreading = 8
players_min = 2
block_lengths = [2]
grid_points = 64
min_power = 0.01
"""


@pytest.fixture
def small_region(tmp_path):
    p = tmp_path / "small_region.toml"
    p.write_text(SMALL_REGION)
    return p


@pytest.fixture
def small_sweep(tmp_path):
    p = tmp_path / "small_sweep.toml"
    p.write_text(SMALL_SWEEP)
    return p


class TestLoading:
    def test_fig1_golden(self):
        sc = load_scenario(SCENARIOS / "fig1.toml")
        assert sc.name == "fig1"
        assert sc.spec.players == 2 and sc.spec.spreading == 2
        assert isinstance(sc.f, PacketSuccess) and sc.f.block_length == 2
        assert sc.chain is not None and sc.chain.num_states == 2
        assert len(sc.source_hash) == 64

    def test_fig2_golden(self):
        sc = load_scenario(SCENARIOS / "fig2.toml")
        assert sc.sweep is not None
        assert sc.sweep.spreading == 128
        assert sc.sweep.block_lengths == [10, 100]

    def test_grid_construction(self, small_region):
        sc = load_scenario(small_region)
        for i, g in enumerate(sc.spec.grids):
            assert g[0] == 0.0  # zero action included
            assert g[-1] == sc.spec.max_power[i]
            assert np.all(np.diff(g) > 0)
        # Marked powers present: the fair profile is exactly on-grid.
        from powergames import fair_powers

        prof = fair_powers(sc.spec, sc.f, sc.chain.states[0])
        for i in range(2):
            assert prof.powers[i] in sc.spec.grids[i]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            load_scenario(tmp_path / "nope.toml")

    def test_missing_game_table(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text('name = "bad"\n[efficiency]\nkind = "rate-exp"\nc = 1.0\n')
        with pytest.raises(ScenarioError):
            load_scenario(p)

    def test_state_shape_mismatch(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text(
            SMALL_REGION.replace("states = [[7.0, 1.0], [1.0, 7.0]]", "states = [[7.0], [1.0]]")
        )
        with pytest.raises(ScenarioError):
            load_scenario(p)

    def test_sweep_bound_checked_at_load(self, tmp_path):
        p = tmp_path / "bad_sweep.toml"
        p.write_text(SMALL_SWEEP.replace("players_min = 2", "players_min = 2\nplayers_max = 99"))
        with pytest.raises(ScenarioError):
            load_scenario(p)

    def test_max_feasible_players(self):
        # spreading / target + 1 with target([m=2]) ~ 1.2564: bound ~ 7.37.
        assert max_feasible_players(PacketSuccess(2), 8) == 7


class TestRegionArtifacts:
    def test_marked_points_reevaluate(self, small_region, tmp_path):
        sc = load_scenario(small_region)
        art = run_region_experiment(sc)
        out = tmp_path / "out"
        write_region_artifacts(art, sc, out, figures=False)
        payload = json.loads((out / "points.json").read_text())
        mu = np.array(payload["stationary"])
        for label in ("expected_nash", "expected_fair", "social_star"):
            entry = payload["marked"][label]
            total = np.zeros(2)
            for s, powers in enumerate(entry["powers_by_state"]):
                total += mu[s] * utilities(sc.spec, sc.f, sc.chain.states[s], powers)
            assert np.allclose(total, entry["utilities"], rtol=1e-9)
            assert entry["welfare"] == pytest.approx(total.sum(), rel=1e-9)

    def test_welfare_ordering_and_flags(self, small_region, tmp_path):
        sc = load_scenario(small_region)
        art = run_region_experiment(sc)
        w_ne = art.expected_nash.welfare
        w_op = art.expected_fair.welfare
        w_star = art.social_star.welfare
        assert w_ne <= w_op <= w_star
        assert w_star > w_ne
        assert art.star_rational
        for point in (art.expected_nash, art.expected_fair, art.social_star):
            assert art.region.contains(point.utilities, tol=1e-9)

    def test_region_csv_flags(self, small_region, tmp_path):
        sc = load_scenario(small_region)
        art = run_region_experiment(sc)
        out = tmp_path / "out"
        write_region_artifacts(art, sc, out, figures=False)
        rows = list(csv.DictReader(open(out / "region.csv")))
        assert list(rows[0]) == ["u1", "u2", "isHull", "isPareto", "isIndividuallyRational"]
        assert len(rows) == len(art.region.points)
        n_hull = sum(int(r["isHull"]) for r in rows)
        assert n_hull == len(art.region.hull_idx)

    def test_state_clouds_csv(self, small_region, tmp_path):
        sc = load_scenario(small_region)
        art = run_region_experiment(sc)
        out = tmp_path / "out"
        write_region_artifacts(art, sc, out, figures=False)
        rows = list(csv.DictReader(open(out / "state_regions.csv")))
        assert {r["state"] for r in rows} == {"0", "1"}


class TestSweepArtifacts:
    def test_gain_columns_recompute(self, small_sweep, tmp_path):
        sc = load_scenario(small_sweep)
        curves = run_gain_sweep(sc)
        out = tmp_path / "out"
        write_sweep_artifacts(curves, sc, out, figures=False)
        gains = list(csv.DictReader(open(out / "gains.csv")))
        welfare = list(csv.DictReader(open(out / "welfare.csv")))
        assert list(gains[0]) == ["alpha", "gainDRG", "gainSDRG"]
        assert list(welfare[0]) == ["players", "alpha", "wNE", "wDRG", "wSDRG"]
        assert len(gains) == len(welfare) > 0
        for g, w in zip(gains, welfare):
            w_ne, w_drg, w_sdrg = (float(w[k]) for k in ("wNE", "wDRG", "wSDRG"))
            assert float(g["gainDRG"]) == pytest.approx(
                100.0 * (w_drg - w_ne) / w_ne, rel=1e-9
            )
            assert float(g["gainSDRG"]) == pytest.approx(
                100.0 * (w_sdrg - w_ne) / w_ne, rel=1e-9
            )

    def test_gains_nonnegative_and_alpha_bounded(self, small_sweep):
        sc = load_scenario(small_sweep)
        (curve,) = run_gain_sweep(sc)
        assert curve.rows
        for row in curve.rows:
            assert row.gain_fair_pct >= 0.0
            assert row.gain_social_pct >= 0.0
            assert row.w_social >= row.w_fair >= row.w_nash
            assert row.alpha < curve.alpha_max


class TestCli:
    def test_one_shot_ok(self, capsys):
        assert main(["one-shot", "--scenario", str(SCENARIOS / "fig1.toml")]) == 0
        out = capsys.readouterr().out
        assert "selfish SINR target" in out and "state 1" in out

    def test_invalid_scenario_exit_1(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("not toml at all [[[")
        assert main(["one-shot", "--scenario", str(p)]) == 1

    def test_infeasible_load_exit_2(self, tmp_path, capsys):
        p = tmp_path / "hot.toml"
        p.write_text(
            'name = "hot"\n[game]\nplayers = 2\nnoise = 1.0\nspreading = 1\n'
            'max_power = 10.0\n[efficiency]\nkind = "packet-success"\nblock_length = 2\n'
            "[channel]\neta = [7.0, 1.0]\n"
        )
        assert main(["one-shot", "--scenario", str(p)]) == 2

    def test_drg_writes_trace_and_audit(self, small_region, tmp_path, capsys):
        out = tmp_path / "drg"
        code = main(
            [
                "drg",
                "--scenario",
                str(small_region),
                "--out",
                str(out),
                "--discount",
                "0.3",
                "--deviant",
                "1",
                "--no-figures",
            ]
        )
        assert code == 0
        assert (out / "drg_trace.csv").exists()
        assert (out / "drg_deviation_trace.csv").exists()
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["is_equilibrium"] is True

    def test_region_and_audit_commands(self, small_region, tmp_path):
        out = tmp_path / "region"
        assert (
            main(
                [
                    "region",
                    "--scenario",
                    str(small_region),
                    "--out",
                    str(out),
                    "--no-figures",
                ]
            )
            == 0
        )
        for name in ("region.csv", "state_regions.csv", "points.json", "metadata.json"):
            assert (out / name).exists()
        out2 = tmp_path / "audit"
        assert (
            main(["audit", "--scenario", str(small_region), "--out", str(out2)]) == 0
        )
        rows = list(csv.DictReader(open(out2 / "audit.csv")))
        assert len(rows) == 2 * 2  # two states x two discounts
        assert all(r["isEquilibrium"] == "1" for r in rows)

    def test_sweep_command(self, small_sweep, tmp_path):
        out = tmp_path / "sweep"
        assert (
            main(
                ["sweep", "--scenario", str(small_sweep), "--out", str(out), "--no-figures"]
            )
            == 0
        )
        assert (out / "gains.csv").exists() and (out / "welfare.csv").exists()

    def test_figures_rendered(self, small_region, tmp_path):
        out = tmp_path / "regionfig"
        assert (
            main(["region", "--scenario", str(small_region), "--out", str(out)]) == 0
        )
        assert (out / "region.png").stat().st_size > 0


class TestDeterminism:
    def test_region_outputs_byte_identical(self, small_region, tmp_path):
        sc = load_scenario(small_region)
        dirs = []
        for tag in ("a", "b"):
            art = run_region_experiment(sc)
            out = tmp_path / tag
            write_region_artifacts(art, sc, out, figures=False)
            dirs.append(out)
        for name in ("region.csv", "state_regions.csv", "points.json"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_sweep_outputs_byte_identical(self, small_sweep, tmp_path):
        sc = load_scenario(small_sweep)
        dirs = []
        for tag in ("a", "b"):
            curves = run_gain_sweep(sc)
            out = tmp_path / tag
            write_sweep_artifacts(curves, sc, out, figures=False)
            dirs.append(out)
        for name in ("gains.csv", "welfare.csv"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
