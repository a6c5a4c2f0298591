"""Discounted repeated play with public-signal monitoring.

The stage game is repeated within one channel coherence block; stage
payoffs are averaged with weights ``d * (1-d)**(t-1)`` where the discount
``d`` doubles as a per-stage stopping probability.  Players never see each
other's powers: the receiver broadcasts a public signal (noise plus total
received power) after every stage, and cooperation is enforced by grim
trigger plans that revert to the one-shot Nash profile forever once the
signal leaves its cooperative value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .efficiency import EfficiencyFunction, equilibrium_sinr, fair_sinr
from .errors import InfeasibleLoadError
from .game import GameSpec, as_state, fair_powers, nash_powers, utilities

__all__ = [
    "public_signal",
    "discount_threshold",
    "RepeatedGameConfig",
    "default_horizon",
    "TriggerPolicy",
    "grim_trigger_policies",
    "deviate_once",
    "RepeatedGameTrace",
    "run_repeated_game",
    "EquilibriumAudit",
    "audit_equilibrium",
]

TAIL_BOUND = 1e-12

# A policy maps (stage index >= 1, past public signals) to a power.
Policy = Callable[[int, Sequence[float]], float]


def public_signal(spec: GameSpec, eta, powers) -> float:
    """Receiver broadcast: noise plus total received power.

    No 1/spreading factor here -- the receiver reports raw received power,
    the despreading gain only enters per-user SINRs.
    """
    eta = as_state(spec, eta)
    powers = np.asarray(powers, dtype=float)
    return float(spec.noise + powers @ eta)


def discount_threshold(spec: GameSpec, f: EfficiencyFunction) -> float:
    """Largest discount for which the grim trigger plan is an equilibrium.

    Returned as-is: a value above 1 means any discount in (0,1) supports
    cooperation, a nonpositive value means none does.  Requires at least
    two players and a non-saturated Nash profile.
    """
    if spec.players < 2:
        raise ValueError("cooperation threshold needs at least two players")
    a = spec.shape.effective_interferers
    b = equilibrium_sinr(f)
    if 1.0 - a * b <= 0:
        raise InfeasibleLoadError("non-saturated Nash profile does not exist")
    g = fair_sinr(f, spec.shape)
    return (1.0 - a * g) / (a * g) * f.value(g) / f.value(b) - (1.0 - a * b) / (a * b)


def default_horizon(discount: float, tail: float = TAIL_BOUND) -> int:
    """Smallest T with (1-d)**T <= tail, so the truncated weights sum to 1-tail."""
    return int(math.ceil(math.log(tail) / math.log(1.0 - discount)))


@dataclass
class RepeatedGameConfig:
    """Simulation parameters for a discounted repeated game.

    ``horizon`` defaults to the smallest truncation with tail weight below
    1e-12.  ``signal_tolerance`` is the relative mismatch a trigger policy
    forgives; zero means bit-exact comparison.
    """

    discount: float
    horizon: int | None = None
    signal_tolerance: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if self.signal_tolerance < 0:
            raise ValueError("signal tolerance must be nonnegative")
        if self.horizon is None:
            self.horizon = default_horizon(self.discount)
        elif (1.0 - self.discount) ** self.horizon > TAIL_BOUND:
            raise ValueError(
                f"horizon {self.horizon} leaves a discounted tail above {TAIL_BOUND:g}"
            )


class TriggerPolicy:
    """Grim trigger plan: cooperate until the public signal deviates, then punish forever.

    The plan is a pure function of the public history, so the punish phase
    is absorbing by construction.  Runtime inputs are exactly (stage, past
    signals); the cooperative/punishment powers and the reference signal
    are baked in at construction.
    """

    def __init__(
        self,
        cooperate_power: float,
        punish_power: float,
        reference_signal: float,
        tolerance: float = 0.0,
    ):
        self.cooperate_power = float(cooperate_power)
        self.punish_power = float(punish_power)
        self.reference_signal = float(reference_signal)
        self.tolerance = float(tolerance)

    def _matches(self, signal: float) -> bool:
        if self.tolerance == 0.0:
            return signal == self.reference_signal
        return abs(signal - self.reference_signal) <= self.tolerance * abs(
            self.reference_signal
        )

    def phase(self, signals: Sequence[float]) -> str:
        if all(self._matches(s) for s in signals):
            return "cooperate"
        return "punish"

    def __call__(self, stage: int, signals: Sequence[float]) -> float:
        if self.phase(signals) == "cooperate":
            return self.cooperate_power
        return self.punish_power


def grim_trigger_policies(
    spec: GameSpec, f: EfficiencyFunction, eta, tolerance: float = 0.0
) -> list[TriggerPolicy]:
    """One trigger plan per player, anchored at the fair cooperative profile.

    The reference signal is evaluated through :func:`public_signal` on the
    fair profile so that full compliance reproduces it bit-exactly.
    """
    eta = as_state(spec, eta)
    fair = fair_powers(spec, f, eta)
    nash = nash_powers(spec, f, eta)
    reference = public_signal(spec, eta, fair.powers)
    return [
        TriggerPolicy(fair.powers[i], nash.powers[i], reference, tolerance)
        for i in range(spec.players)
    ]


class deviate_once:
    """Wrap a policy to play a fixed power at one stage, delegating otherwise."""

    def __init__(self, base: Policy, stage: int, power: float):
        self.base = base
        self.stage = stage
        self.power = float(power)

    def phase(self, signals: Sequence[float]) -> str:
        phase = getattr(self.base, "phase", None)
        return phase(signals) if phase is not None else ""

    def __call__(self, stage: int, signals: Sequence[float]) -> float:
        if stage == self.stage:
            return self.power
        return self.base(stage, signals)


@dataclass
class RepeatedGameTrace:
    """Stage-by-stage record of a repeated-game run."""

    powers: np.ndarray  # (T, K)
    signals: np.ndarray  # (T,)
    stage_utilities: np.ndarray  # (T, K)
    discounted: np.ndarray  # (K,)
    tail_bound: float
    phases: list[list[str]]  # (T, K), empty string for phaseless policies

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["stage", "player", "power", "signal", "stageUtility", "phase"]
            )
            for t in range(self.powers.shape[0]):
                for i in range(self.powers.shape[1]):
                    writer.writerow(
                        [
                            t + 1,
                            i + 1,
                            repr(float(self.powers[t, i])),
                            repr(float(self.signals[t])),
                            repr(float(self.stage_utilities[t, i])),
                            self.phases[t][i],
                        ]
                    )


def run_repeated_game(
    spec: GameSpec,
    f: EfficiencyFunction,
    eta,
    config: RepeatedGameConfig,
    policies: Sequence[Policy],
) -> RepeatedGameTrace:
    """Simulate the repeated game stage by stage under public monitoring.

    Each policy sees only the stage index and the list of past public
    signals.  Discounted utilities use weights d*(1-d)**(t-1) truncated at
    the configured horizon; the neglected tail mass is reported.
    """
    eta = as_state(spec, eta)
    if len(policies) != spec.players:
        raise ValueError("need one policy per player")
    T = config.horizon
    d = config.discount
    powers = np.empty((T, spec.players))
    signals_arr = np.empty(T)
    stage_u = np.empty((T, spec.players))
    phases: list[list[str]] = []
    signals: list[float] = []
    for t in range(1, T + 1):
        row = [
            getattr(pol, "phase", lambda s: "")(signals) for pol in policies
        ]
        p_t = np.array([float(pol(t, signals)) for pol in policies])
        u_t = utilities(spec, f, eta, p_t)
        s_t = public_signal(spec, eta, p_t)
        powers[t - 1] = p_t
        stage_u[t - 1] = u_t
        signals_arr[t - 1] = s_t
        phases.append(row)
        signals.append(s_t)
    weights = d * (1.0 - d) ** np.arange(T)
    discounted = weights @ stage_u
    return RepeatedGameTrace(
        powers, signals_arr, stage_u, discounted, (1.0 - d) ** T, phases
    )


@dataclass
class EquilibriumAudit:
    """Result of a one-shot deviation audit of the grim trigger plan."""

    discount: float
    max_relative_gain: float
    is_equilibrium: bool
    per_player_gain: np.ndarray  # (K,) best relative deviation gain
    best_deviation: np.ndarray  # (K,) deviation power attaining it

GAIN_TOLERANCE = 1e-9


def audit_equilibrium(
    spec: GameSpec,
    f: EfficiencyFunction,
    eta,
    discount: float,
    grid_points: int = 10_000,
) -> EquilibriumAudit:
    """Search single-stage deviations from the cooperative plan for profit.

    For every player and every deviation power on a dense grid over
    [0, max_power], compares the discounted payoff of deviating once and
    then best-responding to permanent punishment (the Nash profile, a
    mutual best response) against full cooperation.  By the one-shot
    deviation principle this covers all profitable strategies.
    """
    if not 0.0 < discount < 1.0:
        raise ValueError("discount must lie in (0, 1)")
    eta = as_state(spec, eta)
    fair = fair_powers(spec, f, eta)
    nash = nash_powers(spec, f, eta)
    u_fair = utilities(spec, f, eta, fair.powers)
    u_nash = utilities(spec, f, eta, nash.powers)
    gains = np.empty(spec.players)
    best_dev = np.empty(spec.players)
    received = fair.powers * eta
    for i in range(spec.players):
        interference = (
            spec.noise + (received.sum() - received[i]) / spec.spreading
        )
        grid = np.linspace(0.0, spec.max_power[i], grid_points)
        u_dev = np.zeros(grid.size)
        on = grid > 0
        u_dev[on] = (
            spec.rate * np.asarray(f.value(grid[on] * eta[i] / interference)) / grid[on]
        )
        v_dev = discount * u_dev + (1.0 - discount) * u_nash[i]
        rel = (v_dev - u_fair[i]) / u_fair[i]
        k = int(np.argmax(rel))
        gains[i] = rel[k]
        best_dev[i] = grid[k]
    max_gain = float(gains.max())
    return EquilibriumAudit(
        discount, max_gain, max_gain <= GAIN_TOLERANCE, gains, best_dev
    )
