"""Command-line interface.

Subcommands: ``one-shot`` (closed-form targets and profiles), ``drg``
(repeated-game trace plus deviation audit), ``region`` (expected utility
region artifacts), ``sweep`` (gain-vs-load curves), ``audit`` (equilibrium
audit matrix over the scenario's discount grid).

Exit codes: 0 success, 1 invalid scenario/config, 2 infeasible load.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InfeasibleLoadError, PowerGameError, ScenarioError
from .experiments import (
    run_gain_sweep,
    run_region_experiment,
    solver_metadata,
    write_region_artifacts,
    write_sweep_artifacts,
)
from .game import best_response, fair_powers, nash_powers, sinr_all, utilities
from .efficiency import equilibrium_sinr, fair_sinr
from .repeated import (
    RepeatedGameConfig,
    audit_equilibrium,
    deviate_once,
    discount_threshold,
    grim_trigger_policies,
    run_repeated_game,
)
from .scenario import Scenario, load_scenario


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _scenario_state(scenario: Scenario, index: int) -> np.ndarray:
    states = scenario.states
    if not 0 <= index < states.shape[0]:
        raise ScenarioError(f"state index {index} out of range (S={states.shape[0]})")
    return states[index]


def cmd_one_shot(args) -> int:
    scenario = load_scenario(args.scenario)
    spec, f = scenario.spec, scenario.f
    sel = equilibrium_sinr(f)
    fair = fair_sinr(f, spec.shape)
    print(f"scenario {scenario.name}: K={spec.players} N={spec.spreading} "
          f"noise={_fmt(spec.noise)} rate={_fmt(spec.rate)}")
    print(f"selfish SINR target {_fmt(sel)}   fair SINR target {_fmt(fair)}")
    if spec.players >= 2:
        thr = discount_threshold(spec, f)
        print(f"cooperation discount threshold {_fmt(thr)}")
    for s, eta in enumerate(scenario.states):
        print(f"-- state {s}: eta = ({', '.join(_fmt(v) for v in eta)})")
        for label, prof in (
            ("nash", nash_powers(spec, f, eta)),
            ("fair", fair_powers(spec, f, eta)),
        ):
            x = sinr_all(spec, eta, prof.powers)
            u = utilities(spec, f, eta, prof.powers)
            sat = "".join("*" if s_ else " " for s_ in prof.saturated).rstrip()
            print(
                f"   {label}: powers ({', '.join(_fmt(p) for p in prof.powers)})"
                f"  sinr ({', '.join(_fmt(v) for v in x)})"
                f"  utility ({', '.join(_fmt(v) for v in u)})"
                + (f"  saturated[{sat}]" if prof.any_saturated else "")
            )
    return 0


def cmd_drg(args) -> int:
    scenario = load_scenario(args.scenario)
    spec, f = scenario.spec, scenario.f
    eta = _scenario_state(scenario, args.state)
    discount = args.discount
    if discount is None:
        discount = scenario.discounts[0] if scenario.discounts else 0.5
    config = RepeatedGameConfig(discount)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    policies = grim_trigger_policies(spec, f, eta)
    trace = run_repeated_game(spec, f, eta, config, policies)
    trace.write_csv(outdir / "drg_trace.csv")
    written = [outdir / "drg_trace.csv"]

    deviation_trace = None
    if args.deviant is not None:
        i = args.deviant - 1
        if not 0 <= i < spec.players:
            raise ScenarioError(f"deviant player {args.deviant} out of range")
        power = args.deviation_power
        if power is None:
            power = best_response(
                spec, f, eta, fair_powers(spec, f, eta).powers, i, grid=None
            )
        policies = grim_trigger_policies(spec, f, eta)
        policies[i] = deviate_once(policies[i], args.deviation_stage, power)
        deviation_trace = run_repeated_game(spec, f, eta, config, policies)
        deviation_trace.write_csv(outdir / "drg_deviation_trace.csv")
        written.append(outdir / "drg_deviation_trace.csv")

    audit = audit_equilibrium(spec, f, eta, discount, args.grid_points)
    thr = discount_threshold(spec, f) if spec.players >= 2 else None
    payload = {
        "scenario_hash": scenario.source_hash,
        "state": args.state,
        "discount": discount,
        "horizon": config.horizon,
        "tail_bound": trace.tail_bound,
        "threshold": thr,
        "max_relative_gain": audit.max_relative_gain,
        "is_equilibrium": audit.is_equilibrium,
        "discounted_utilities": [float(v) for v in trace.discounted],
        "solver": solver_metadata(),
    }
    (outdir / "metadata.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    written.append(outdir / "metadata.json")
    if not args.no_figures:
        from .plots import render_trace

        written.append(render_trace(trace, outdir / "drg_trace.png", "cooperative run"))
        if deviation_trace is not None:
            written.append(
                render_trace(
                    deviation_trace, outdir / "drg_deviation_trace.png", "deviation run"
                )
            )
    print(
        f"discount {_fmt(discount)}  max relative deviation gain "
        f"{audit.max_relative_gain:.3e}  equilibrium: {audit.is_equilibrium}"
    )
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_region(args) -> int:
    scenario = load_scenario(args.scenario)
    artifacts = run_region_experiment(scenario, method=args.method, budget=args.budget)
    written = write_region_artifacts(
        artifacts, scenario, args.out, figures=not args.no_figures
    )
    w = [
        artifacts.expected_nash.welfare,
        artifacts.expected_fair.welfare,
        artifacts.social_star.welfare,
    ]
    print(
        f"welfare: nash {_fmt(w[0])} <= fair {_fmt(w[1])} <= star {_fmt(w[2])}  "
        f"(region method {artifacts.region.method}, {len(artifacts.region.points)} points)"
    )
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    curves = run_gain_sweep(scenario)
    written = write_sweep_artifacts(
        curves, scenario, args.out, figures=not args.no_figures
    )
    for curve in curves:
        last = curve.rows[-1]
        print(
            f"m={curve.block_length}: {len(curve.rows)} loads, last K={last.players} "
            f"gainDRG {_fmt(last.gain_fair_pct)}% gainSDRG {_fmt(last.gain_social_pct)}% "
            f"(alpha_max {_fmt(curve.alpha_max)})"
        )
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_audit(args) -> int:
    scenario = load_scenario(args.scenario)
    spec, f = scenario.spec, scenario.f
    if not scenario.discounts:
        raise ScenarioError("audit needs a [repeated] discounts list")
    thr = discount_threshold(spec, f) if spec.players >= 2 else float("inf")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "audit.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["state", "discount", "threshold", "maxRelativeGain", "isEquilibrium"]
        )
        for s, eta in enumerate(scenario.states):
            for d in scenario.discounts:
                audit = audit_equilibrium(spec, f, eta, d, args.grid_points)
                writer.writerow(
                    [
                        s,
                        repr(float(d)),
                        repr(float(thr)),
                        repr(audit.max_relative_gain),
                        int(audit.is_equilibrium),
                    ]
                )
                print(
                    f"state {s} discount {_fmt(d)}: gain {audit.max_relative_gain:.3e} "
                    f"equilibrium {audit.is_equilibrium}"
                )
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powergames",
        description="Energy-efficient power-control games: equilibria, "
        "trigger-strategy cooperation, and utility regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_default):
        p.add_argument("--scenario", required=True, help="scenario TOML file")
        if out_default is not None:
            p.add_argument("--out", default=out_default, help="output directory")
            p.add_argument(
                "--no-figures", action="store_true", help="skip matplotlib rendering"
            )

    p = sub.add_parser("one-shot", help="closed-form targets, profiles, threshold")
    add_common(p, None)
    p.set_defaults(func=cmd_one_shot)

    p = sub.add_parser("drg", help="repeated-game trace plus deviation audit")
    add_common(p, "out/drg")
    p.add_argument("--state", type=int, default=0, help="channel state index")
    p.add_argument("--discount", type=float, default=None)
    p.add_argument("--deviant", type=int, default=None, help="1-based deviating player")
    p.add_argument("--deviation-stage", type=int, default=1)
    p.add_argument("--deviation-power", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=10_000)
    p.set_defaults(func=cmd_drg)

    p = sub.add_parser("region", help="expected utility region artifacts")
    add_common(p, "out/region")
    p.add_argument(
        "--method", choices=("auto", "enumerate", "minkowski"), default="auto"
    )
    p.add_argument("--budget", type=int, default=None, help="enumeration budget")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("sweep", help="cooperation gain vs spectral load")
    add_common(p, "out/sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="equilibrium audit over the discount grid")
    add_common(p, "out/audit")
    p.add_argument("--grid-points", type=int, default=10_000)
    p.set_defaults(func=cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleLoadError as exc:
        print(f"infeasible load: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, PowerGameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
