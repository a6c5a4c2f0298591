"""Scenario files: one TOML document per experiment.

Schema (see the shipped ``scenarios/`` goldens):

    name = "fig1"            # required
    seed = 7                 # optional, default 0

    [game]                   # required
    players = 2
    noise = 1.0
    rate = 1.0               # optional, default 1.0
    spreading = 2            # optional, default 1
    max_power = 10.0         # scalar or per-player list

    [efficiency]             # required
    kind = "packet-success"  # or "rate-exp"
    block_length = 2         # packet-success
    # c = 1.0                # rate-exp (alternatively rate = R, c = 2**R - 1)

    [channel]                # markov form
    states = [[7.0, 1.0], [1.0, 7.0]]
    kernel = [[0.5, 0.5], [0.5, 0.5]]
    # initial = 0
    # -- or fixed form --
    # eta = [7.0, 1.0]

    [grid]                   # optional: per-player discrete powers
    points = 24              # log-spaced between min_power and max_power
    min_power = 0.01
    include_zero = true      # prepend a 0 W action
    include_marked = true    # insert per-state Nash/fair powers

    [repeated]               # optional
    discounts = [0.5, 0.1, 0.01]

    [sweep]                  # optional: drives the gain-vs-load experiment
    spreading = 128
    players_min = 2
    # players_max = 30       # omit for "largest non-saturated K"
    block_lengths = [10, 100]
    strong_gain = 2.0
    weak_gain = 1.0
    grid_points = 256
    min_power = 0.001
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .efficiency import EfficiencyFunction, PacketSuccess, RateExp, equilibrium_sinr
from .errors import ScenarioError
from .game import GameSpec, fair_powers, nash_powers
from .stochastic import MarkovChannel

__all__ = ["Scenario", "SweepConfig", "load_scenario", "max_feasible_players"]


@dataclass
class SweepConfig:
    spreading: int
    players_min: int
    players_max: int | None
    block_lengths: list[int]
    strong_gain: float
    weak_gain: float
    grid_points: int
    min_power: float


@dataclass
class Scenario:
    name: str
    seed: int
    spec: GameSpec
    f: EfficiencyFunction
    chain: MarkovChannel | None
    fixed_state: np.ndarray | None
    discounts: list[float]
    sweep: SweepConfig | None
    source_hash: str
    path: Path

    @property
    def states(self) -> np.ndarray:
        """All channel states as a (S, K) array regardless of channel form."""
        if self.chain is not None:
            return self.chain.states
        return self.fixed_state[None, :]


def max_feasible_players(f: EfficiencyFunction, spreading: int) -> int:
    """Largest K with a non-saturated Nash profile: K < N / target + 1."""
    bound = spreading / equilibrium_sinr(f) + 1.0
    k = int(np.ceil(bound)) - 1
    return max(k, 1)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ScenarioError(f"missing key {key!r} in [{where}]")
    return table[key]


def _efficiency_from(table: dict) -> EfficiencyFunction:
    kind = _require(table, "kind", "efficiency")
    if kind == "packet-success":
        m = _require(table, "block_length", "efficiency")
        if not isinstance(m, int) or m < 1:
            raise ScenarioError("block_length must be a positive integer")
        return PacketSuccess(m)
    if kind == "rate-exp":
        if "c" in table:
            c = float(table["c"])
        elif "rate" in table:
            c = 2.0 ** float(table["rate"]) - 1.0
        else:
            raise ScenarioError("rate-exp needs either 'c' or 'rate'")
        if not c > 0:
            raise ScenarioError("rate-exp constant must be positive")
        return RateExp(c)
    raise ScenarioError(f"unknown efficiency kind {kind!r}")


def _marked_powers(spec: GameSpec, f, states: np.ndarray) -> list[set[float]]:
    """Per-player unclamped Nash/fair powers across states, for grid insertion."""
    marked: list[set[float]] = [set() for _ in range(spec.players)]
    for eta in states:
        for maker in (nash_powers, fair_powers):
            prof = maker(spec, f, eta)
            for i, p in enumerate(prof.powers):
                marked[i].add(float(p))
    return marked


def _build_grids(spec: GameSpec, f, states, table: dict) -> tuple[np.ndarray, ...]:
    points = int(table.get("points", 24))
    if points < 2:
        raise ScenarioError("grid points must be >= 2")
    min_power = float(table.get("min_power", spec.noise * 1e-2))
    include_zero = bool(table.get("include_zero", True))
    include_marked = bool(table.get("include_marked", True))
    marked = (
        _marked_powers(spec, f, states)
        if include_marked
        else [set() for _ in range(spec.players)]
    )
    grids = []
    for i in range(spec.players):
        cap = float(spec.max_power[i])
        if not 0 < min_power < cap:
            raise ScenarioError("grid min_power must lie in (0, max_power)")
        g = np.geomspace(min_power, cap, points)
        extra = [p for p in marked[i] if p <= cap]
        if include_zero:
            extra.append(0.0)
        g = np.unique(np.concatenate([g, np.array(extra, dtype=float)]))
        g[-1] = cap
        grids.append(g)
    return tuple(grids)


def _channel_from(table: dict, players: int) -> tuple[MarkovChannel | None, np.ndarray | None]:
    if "eta" in table:
        eta = np.asarray(table["eta"], dtype=float)
        if eta.shape != (players,) or not np.all(eta > 0):
            raise ScenarioError("channel eta must list one positive gain per player")
        return None, eta
    states = _require(table, "states", "channel")
    kernel = _require(table, "kernel", "channel")
    try:
        chain = MarkovChannel(
            np.asarray(states, dtype=float),
            np.asarray(kernel, dtype=float),
            table.get("initial"),
        )
    except ValueError as exc:
        raise ScenarioError(f"bad channel: {exc}") from exc
    if chain.states.shape[1] != players:
        raise ScenarioError("channel states and game players disagree")
    return chain, None


def _sweep_from(table: dict, f: EfficiencyFunction) -> SweepConfig:
    cfg = SweepConfig(
        spreading=int(_require(table, "spreading", "sweep")),
        players_min=int(table.get("players_min", 2)),
        players_max=int(table["players_max"]) if table.get("players_max") else None,
        block_lengths=[int(m) for m in table.get("block_lengths", [])],
        strong_gain=float(table.get("strong_gain", 2.0)),
        weak_gain=float(table.get("weak_gain", 1.0)),
        grid_points=int(table.get("grid_points", 256)),
        min_power=float(table.get("min_power", 1e-3)),
    )
    if cfg.spreading < 1:
        raise ScenarioError("sweep spreading must be >= 1")
    if cfg.players_min < 2:
        raise ScenarioError("sweep needs at least two players")
    if not cfg.block_lengths:
        if not isinstance(f, PacketSuccess):
            raise ScenarioError("sweep without block_lengths needs a packet-success curve")
        cfg.block_lengths = [f.block_length]
    if not (cfg.strong_gain > 0 and cfg.weak_gain > 0):
        raise ScenarioError("sweep gains must be positive")
    if cfg.grid_points < 8:
        raise ScenarioError("sweep grid_points must be >= 8")
    for m in cfg.block_lengths:
        kmax = max_feasible_players(PacketSuccess(m), cfg.spreading)
        if cfg.players_min > kmax:
            raise ScenarioError(
                f"players_min {cfg.players_min} already saturates block length {m}"
            )
        if cfg.players_max is not None and cfg.players_max > kmax:
            raise ScenarioError(
                f"players_max {cfg.players_max} violates the non-saturation bound "
                f"{kmax} for block length {m}"
            )
    return cfg


def load_scenario(path) -> Scenario:
    """Parse and cross-validate a scenario file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(f"scenario file is not valid TOML: {exc}") from exc

    if "name" not in doc:
        raise ScenarioError("scenario needs a top-level 'name'")
    game = doc.get("game")
    if not isinstance(game, dict):
        raise ScenarioError("scenario needs a [game] table")
    eff = doc.get("efficiency")
    if not isinstance(eff, dict):
        raise ScenarioError("scenario needs an [efficiency] table")
    f = _efficiency_from(eff)

    try:
        spec = GameSpec(
            players=int(_require(game, "players", "game")),
            noise=float(_require(game, "noise", "game")),
            rate=float(game.get("rate", 1.0)),
            spreading=int(game.get("spreading", 1)),
            max_power=game.get("max_power", 1e6),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad [game] table: {exc}") from exc

    chain, fixed = (None, None)
    if "channel" in doc:
        chain, fixed = _channel_from(doc["channel"], spec.players)

    if "grid" in doc:
        if chain is None and fixed is None:
            raise ScenarioError("[grid] needs a [channel] to draw marked powers from")
        states = chain.states if chain is not None else fixed[None, :]
        grids = _build_grids(spec, f, states, doc["grid"])
        spec = GameSpec(
            players=spec.players,
            noise=spec.noise,
            rate=spec.rate,
            spreading=spec.spreading,
            max_power=spec.max_power,
            grids=grids,
        )

    discounts = [float(d) for d in doc.get("repeated", {}).get("discounts", [])]
    for d in discounts:
        if not 0.0 < d < 1.0:
            raise ScenarioError("discounts must lie in (0, 1)")

    sweep = _sweep_from(doc["sweep"], f) if "sweep" in doc else None

    return Scenario(
        name=str(doc["name"]),
        seed=int(doc.get("seed", 0)),
        spec=spec,
        f=f,
        chain=chain,
        fixed_state=fixed,
        discounts=discounts,
        sweep=sweep,
        source_hash=hashlib.sha256(raw).hexdigest(),
        path=path,
    )
