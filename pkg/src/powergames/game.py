"""One-shot power-control game: SINR, energy efficiency, and equilibria.

K transmitters share a multiple-access channel with spreading factor N and
single-user decoding at the receiver.  Each player's payoff is the energy
efficiency of their own link, ``rate * f(SINR) / power`` in bit/J.  Both
the selfish (Nash) profile and the SINR-fair cooperative profile have the
closed form ``noise / gain * target / (1 - a * target)`` with ``a`` the
effective interferer load; they differ only in the SINR target.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .efficiency import EfficiencyFunction, LoadShape, equilibrium_sinr, fair_sinr, fair_uniqueness
from .errors import GridMissingError, InfeasibleLoadError, UniquenessConditionError

__all__ = [
    "GameSpec",
    "TargetProfile",
    "as_state",
    "sinr",
    "sinr_all",
    "utilities",
    "nash_powers",
    "fair_powers",
    "best_response",
]


@dataclass(eq=False)
class GameSpec:
    """Static description of the power-control game.

    ``max_power`` may be a scalar (shared cap) or one value per player.
    ``grids`` holds the optional per-player discrete power sets used by the
    stochastic-game operations; each grid must be strictly ascending,
    nonnegative, and end at that player's cap.
    """

    players: int
    noise: float
    rate: float = 1.0
    spreading: int = 1
    max_power: float | np.ndarray = 1e6
    grids: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        if self.players < 1:
            raise ValueError("players must be >= 1")
        if not self.noise > 0:
            raise ValueError("noise power must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.spreading < 1:
            raise ValueError("spreading must be >= 1")
        self.max_power = np.broadcast_to(
            np.asarray(self.max_power, dtype=float), (self.players,)
        ).copy()
        if not np.all(self.max_power > 0):
            raise ValueError("max powers must be positive")
        if self.grids is not None:
            if len(self.grids) != self.players:
                raise ValueError("need one power grid per player")
            grids = []
            for i, g in enumerate(self.grids):
                g = np.asarray(g, dtype=float)
                if g.ndim != 1 or g.size < 1:
                    raise ValueError("power grids must be non-empty vectors")
                if np.any(np.diff(g) <= 0):
                    raise ValueError("power grids must be strictly ascending")
                if g[0] < 0:
                    raise ValueError("grid powers must be nonnegative")
                if g[-1] != self.max_power[i]:
                    raise ValueError("last grid power must equal the player's cap")
                grids.append(g)
            self.grids = tuple(grids)

    @property
    def shape(self) -> LoadShape:
        return LoadShape(self.players, self.spreading)

    def grid(self, i: int) -> np.ndarray:
        if self.grids is None:
            raise GridMissingError("this operation needs discrete power grids")
        return self.grids[i]


def as_state(spec: GameSpec, eta) -> np.ndarray:
    """Validate a channel state: K strictly positive squared gains."""
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (spec.players,):
        raise ValueError(f"channel state must have shape ({spec.players},)")
    if not np.all(eta > 0):
        raise ValueError("squared channel gains must be positive")
    return eta


def _check_profile(spec: GameSpec, powers) -> np.ndarray:
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (spec.players,):
        raise ValueError(f"power profile must have shape ({spec.players},)")
    if np.any(powers < 0) or np.any(powers > spec.max_power * (1 + 1e-12)):
        raise ValueError("powers must lie in [0, max_power]")
    return powers


def sinr(spec: GameSpec, eta, powers, i: int) -> float:
    """SINR of user i: own received power over noise plus (1/N)-scaled interference."""
    if not 0 <= i < spec.players:
        raise IndexError(f"player index {i} out of range")
    return float(sinr_all(spec, eta, powers)[i])


def sinr_all(spec: GameSpec, eta, powers) -> np.ndarray:
    eta = as_state(spec, eta)
    powers = _check_profile(spec, powers)
    received = powers * eta
    interference = (received.sum() - received) / spec.spreading
    return received / (spec.noise + interference)


def utilities(spec: GameSpec, f: EfficiencyFunction, eta, powers) -> np.ndarray:
    """Energy efficiency of every user in bit/J; zero at zero power."""
    x = sinr_all(spec, eta, powers)
    powers = np.asarray(powers, dtype=float)
    out = np.zeros(spec.players)
    on = powers > 0
    out[on] = spec.rate * np.asarray(f.value(x[on])) / powers[on]
    return out


@dataclass
class TargetProfile:
    """A common-SINR power profile plus saturation bookkeeping.

    ``target`` is the SINR every player attains when unclamped; players
    whose formula power exceeded their cap are clamped and flagged.
    """

    powers: np.ndarray
    saturated: np.ndarray
    target: float

    @property
    def any_saturated(self) -> bool:
        return bool(self.saturated.any())


def _target_profile(spec: GameSpec, eta, target: float) -> TargetProfile:
    a = spec.shape.effective_interferers
    denom = 1.0 - a * target
    if denom <= 0:
        raise InfeasibleLoadError(
            f"load a={a:g} saturates at SINR target {target:g} (1 - a*target <= 0)"
        )
    p = spec.noise / eta * (target / denom)
    saturated = p > spec.max_power
    return TargetProfile(np.minimum(p, spec.max_power), saturated, target)


def nash_powers(spec: GameSpec, f: EfficiencyFunction, eta) -> TargetProfile:
    """Closed-form non-saturated Nash profile; clamped players are flagged.

    Raises :class:`InfeasibleLoadError` when the load is too high for the
    non-saturated equilibrium to exist.
    """
    eta = as_state(spec, eta)
    return _target_profile(spec, eta, equilibrium_sinr(f))


@lru_cache(maxsize=None)
def _fair_uniqueness_ok(f: EfficiencyFunction, shape: LoadShape) -> None:
    report = fair_uniqueness(f, shape)
    if not report.holds:
        raise UniquenessConditionError(
            f"fair-point uniqueness condition failed: {report.detail}"
        )


def fair_powers(
    spec: GameSpec, f: EfficiencyFunction, eta, check_uniqueness: bool = True
) -> TargetProfile:
    """SINR-fair cooperative profile: all received powers equal, SINR = fair target.

    Verifies the sufficient uniqueness condition once per (curve, shape)
    unless ``check_uniqueness`` is disabled.
    """
    eta = as_state(spec, eta)
    shape = spec.shape
    if check_uniqueness and shape.effective_interferers > 0:
        _fair_uniqueness_ok(f, shape)
    return _target_profile(spec, eta, fair_sinr(f, shape))


def best_response(
    spec: GameSpec,
    f: EfficiencyFunction,
    eta,
    powers,
    i: int,
    grid: np.ndarray | None = None,
) -> float:
    """Utility-maximizing own power against fixed opponent powers.

    Continuous action set: the utility is unimodal in own power, peaking
    where own SINR hits the selfish target, so the maximizer is that power
    clamped to the cap.  Discrete set (explicit ``grid`` argument, or the
    spec's grid for player i): exhaustive argmax, ties to the lowest power.
    """
    eta = as_state(spec, eta)
    powers = np.asarray(powers, dtype=float)
    if not 0 <= i < spec.players:
        raise IndexError(f"player index {i} out of range")
    others = powers * eta
    interference = spec.noise + (others.sum() - others[i]) / spec.spreading
    if grid is None and spec.grids is not None:
        grid = spec.grids[i]
    if grid is None:
        p = equilibrium_sinr(f) * interference / eta[i]
        return float(min(p, spec.max_power[i]))
    grid = np.asarray(grid, dtype=float)
    u = np.zeros(grid.size)
    on = grid > 0
    u[on] = spec.rate * np.asarray(f.value(grid[on] * eta[i] / interference)) / grid[on]
    return float(grid[int(np.argmax(u))])
