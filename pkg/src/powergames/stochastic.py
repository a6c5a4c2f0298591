"""Stochastic power-control game over a Markov channel.

Channel gains evolve on a finite state set with an irreducible transition
kernel (every entry strictly positive).  With discrete power grids, the
long-run utility vectors achievable by stationary state-feedback play form
a finite cloud whose convex hull is the limit feasible set (public
randomization convexifies it); intersecting with the minmax orthant gives
the individually-rational region whose points are sustainable as
equilibrium utilities at low discounting.  Nothing here constructs the
supporting strategies, only the region and its marked points.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .efficiency import EfficiencyFunction
from .errors import EmptyRegionError, NonIrreducibleError
from .game import GameSpec, as_state, utilities

__all__ = [
    "MarkovChannel",
    "StationaryPolicy",
    "UtilityRegion",
    "is_irreducible",
    "stationary_distribution",
    "joint_actions",
    "action_utilities",
    "expected_utility",
    "minmax",
    "feasible_region",
    "social_optimum",
    "StateSpreadReport",
    "initial_state_spread",
]

ENUM_BUDGET_ENV = "POWERGAMES_ENUM_BUDGET"
DEFAULT_ENUM_BUDGET = 10_000_000

KERNEL_ROW_TOL = 1e-12
STATIONARY_TOL = 1e-12


@dataclass(eq=False)
class MarkovChannel:
    """Finite channel-state process: states (S, K) and kernel rows pi(next | current)."""

    states: np.ndarray
    kernel: np.ndarray
    initial: int | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.kernel = np.asarray(self.kernel, dtype=float)
        if self.states.ndim != 2:
            raise ValueError("states must be a (num_states, players) array")
        S = self.states.shape[0]
        if self.kernel.shape != (S, S):
            raise ValueError("kernel must be square over the state set")
        if not np.all(self.states > 0):
            raise ValueError("squared channel gains must be positive")
        if np.any(self.kernel < 0):
            raise ValueError("kernel entries must be nonnegative")
        if np.any(np.abs(self.kernel.sum(axis=1) - 1.0) > KERNEL_ROW_TOL):
            raise ValueError("kernel rows must sum to 1")
        if self.initial is not None and not 0 <= self.initial < S:
            raise ValueError("initial state index out of range")

    @property
    def num_states(self) -> int:
        return self.states.shape[0]


def is_irreducible(chain: MarkovChannel) -> bool:
    """Strict irreducibility: every one-step transition has positive probability."""
    return bool(np.all(chain.kernel > 0))


def stationary_distribution(chain: MarkovChannel) -> np.ndarray:
    """Invariant measure mu with mu @ kernel = mu and sum(mu) = 1.

    Solves the balance equations with the last one replaced by the
    normalization (valid for irreducible chains, where the null space of
    kernel.T - I is one-dimensional).
    """
    if not is_irreducible(chain):
        raise NonIrreducibleError("kernel has a zero entry; invariant measure not unique")
    S = chain.num_states
    A = chain.kernel.T - np.eye(S)
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    mu = np.linalg.solve(A, b)
    residual = np.max(np.abs(mu @ chain.kernel - mu))
    if residual > STATIONARY_TOL or np.any(mu < 0):
        raise ArithmeticError(f"stationary solve failed (residual {residual:g})")
    return mu


@dataclass
class StationaryPolicy:
    """Pure state-feedback policy: one on-grid joint power profile per state."""

    powers: np.ndarray  # (S, K)

    def __post_init__(self):
        self.powers = np.asarray(self.powers, dtype=float)
        if self.powers.ndim != 2:
            raise ValueError("policy powers must be a (num_states, players) array")


def _check_policy(spec: GameSpec, chain: MarkovChannel, policy: StationaryPolicy):
    if policy.powers.shape != (chain.num_states, spec.players):
        raise ValueError("policy shape does not match the chain and spec")
    for i in range(spec.players):
        if not np.isin(policy.powers[:, i], spec.grid(i)).all():
            raise ValueError(f"policy uses off-grid powers for player {i}")


def joint_actions(spec: GameSpec) -> np.ndarray:
    """All joint power profiles (A, K), row-major over per-player grids."""
    grids = [spec.grid(i) for i in range(spec.players)]
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def action_utilities(spec: GameSpec, f: EfficiencyFunction, eta, actions) -> np.ndarray:
    """Utility vectors (A, K) of many joint actions in one channel state."""
    eta = as_state(spec, eta)
    actions = np.asarray(actions, dtype=float)
    received = actions * eta
    interference = (received.sum(axis=1, keepdims=True) - received) / spec.spreading
    x = received / (spec.noise + interference)
    out = np.zeros_like(actions)
    on = actions > 0
    out[on] = spec.rate * np.asarray(f.value(x[on])) / actions[on]
    return out


def expected_utility(
    spec: GameSpec, f: EfficiencyFunction, chain: MarkovChannel, policy: StationaryPolicy
) -> np.ndarray:
    """Long-run expected utility vector of a stationary policy under the invariant measure."""
    _check_policy(spec, chain, policy)
    mu = stationary_distribution(chain)
    total = np.zeros(spec.players)
    for s in range(chain.num_states):
        total += mu[s] * utilities(spec, f, chain.states[s], policy.powers[s])
    return total


def _opponent_profiles(spec: GameSpec, i: int) -> np.ndarray:
    """Joint opponent power profiles (B, K-1) in player order excluding i."""
    grids = [spec.grid(j) for j in range(spec.players) if j != i]
    if not grids:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _best_own_utility(spec, f, eta, i, interference) -> np.ndarray:
    """Max over own grid of utility, for each interference level (vectorized)."""
    grid = spec.grid(i)
    interference = np.atleast_1d(interference)
    x = grid[None, :] * eta[i] / interference[:, None]
    vals = np.zeros_like(x)
    on = grid > 0
    vals[:, on] = spec.rate * np.asarray(f.value(x[:, on])) / grid[None, on]
    return vals.max(axis=1)


def minmax(
    spec: GameSpec,
    f: EfficiencyFunction,
    chain: MarkovChannel,
    method: str = "exhaustive",
) -> np.ndarray:
    """Per-player worst enforceable long-run utility.

    ``exhaustive``: per state, punishers scan their whole joint grid and
    pick the profile minimizing the punished player's best reply value.
    ``max-power``: punishers pinned at their caps, the pointwise minimizer
    since utility falls with interference; kept as the fast path.
    Per-state values are averaged under the invariant measure.
    """
    if method not in ("exhaustive", "max-power"):
        raise ValueError(f"unknown minmax method {method!r}")
    mu = stationary_distribution(chain)
    out = np.zeros(spec.players)
    for i in range(spec.players):
        eta_others_idx = [j for j in range(spec.players) if j != i]
        if method == "exhaustive":
            opp = _opponent_profiles(spec, i)
        else:
            opp = spec.max_power[eta_others_idx][None, :]
        for s in range(chain.num_states):
            eta = chain.states[s]
            interference = (
                spec.noise + (opp @ eta[eta_others_idx]) / spec.spreading
                if opp.shape[1]
                else np.array([spec.noise])
            )
            best = _best_own_utility(spec, f, eta, i, interference)
            out[i] += mu[s] * best.min()
    return out


def _hull_indices_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; returns indices of vertices in CCW order."""
    order = np.lexsort((points[:, 1], points[:, 0]))

    def cross(o, a, b):
        return (points[a, 0] - points[o, 0]) * (points[b, 1] - points[o, 1]) - (
            points[a, 1] - points[o, 1]
        ) * (points[b, 0] - points[o, 0])

    lower: list[int] = []
    for idx in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], idx) <= 0:
            lower.pop()
        lower.append(int(idx))
    upper: list[int] = []
    for idx in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], idx) <= 0:
            upper.pop()
        upper.append(int(idx))
    hull = lower[:-1] + upper[:-1]
    if not hull:
        hull = [int(order[0])]
    return np.array(hull, dtype=np.intp)


def hull_indices(points: np.ndarray) -> np.ndarray:
    """Convex hull vertex indices; CCW-ordered in 2D."""
    points = np.asarray(points, dtype=float)
    n, k = points.shape
    if n == 1:
        return np.array([0], dtype=np.intp)
    if k == 1:
        lo, hi = int(np.argmin(points[:, 0])), int(np.argmax(points[:, 0]))
        return np.array([lo] if lo == hi else [lo, hi], dtype=np.intp)
    if k == 2:
        return _hull_indices_2d(points)
    from scipy.spatial import ConvexHull

    return np.asarray(ConvexHull(points).vertices, dtype=np.intp)


def pareto_mask(points: np.ndarray) -> np.ndarray:
    """Non-dominated mask for maximization; duplicates do not dominate each other."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        if not mask[i]:
            continue
        geq = np.all(points >= points[i], axis=1)
        gt = np.any(points > points[i], axis=1)
        if np.any(geq & gt):
            mask[i] = False
    return mask


def _contains_2d(hull_pts: np.ndarray, point: np.ndarray, tol: float) -> bool:
    m = hull_pts.shape[0]
    if m == 1:
        return bool(np.all(np.abs(point - hull_pts[0]) <= tol))
    cushion = tol * max(1.0, float(np.abs(hull_pts).max()))
    if m == 2:
        a, b = hull_pts
        d = b - a
        L = np.hypot(*d)
        crossv = d[0] * (point[1] - a[1]) - d[1] * (point[0] - a[0])
        if abs(crossv) / max(L, 1e-300) > cushion:
            return False
        t = np.dot(point - a, d) / max(L * L, 1e-300)
        return -tol <= t <= 1 + tol
    for k in range(m):
        a = hull_pts[k]
        b = hull_pts[(k + 1) % m]
        d = b - a
        L = max(np.hypot(*d), 1e-300)
        signed = (d[0] * (point[1] - a[1]) - d[1] * (point[0] - a[0])) / L
        if signed < -cushion:
            return False
    return True


@dataclass
class UtilityRegion:
    """Feasible long-run utility cloud with hull, Pareto, and minmax structure."""

    points: np.ndarray  # (n, K) expected utility vectors
    policy_actions: np.ndarray  # (n, S) joint-action index per state
    actions: np.ndarray  # (A, K) joint-action power table
    hull_idx: np.ndarray  # vertex indices into points (CCW for K = 2)
    pareto_idx: np.ndarray  # subset of hull_idx, non-dominated
    minmax: np.ndarray  # (K,)
    stationary: np.ndarray  # (S,)
    method: str

    @property
    def hull(self) -> np.ndarray:
        return self.points[self.hull_idx]

    @property
    def pareto(self) -> np.ndarray:
        return self.points[self.pareto_idx]

    def rational_mask(self, points: np.ndarray | None = None) -> np.ndarray:
        pts = self.points if points is None else np.asarray(points, dtype=float)
        return np.all(pts >= self.minmax, axis=-1)

    def contains(self, point, tol: float = 1e-9) -> bool:
        """Hull membership with a relative cushion."""
        point = np.asarray(point, dtype=float)
        hull = self.hull
        k = self.points.shape[1]
        if k == 1:
            lo, hi = hull[:, 0].min(), hull[:, 0].max()
            cushion = tol * max(1.0, abs(lo), abs(hi))
            return bool(lo - cushion <= point[0] <= hi + cushion)
        if k == 2:
            return _contains_2d(hull, point, tol)
        from scipy.spatial import ConvexHull

        hull_obj = ConvexHull(hull)
        cushion = tol * max(1.0, float(np.abs(hull).max()))
        return bool(
            np.all(hull_obj.equations[:, :-1] @ point + hull_obj.equations[:, -1] <= cushion)
        )

    def policy(self, row: int) -> StationaryPolicy:
        """Materialize the stationary policy generating points[row]."""
        return StationaryPolicy(self.actions[self.policy_actions[row]])

    def write_csv(self, path) -> None:
        """One row per point: u_1..u_K, isHull, isPareto, isIndividuallyRational."""
        k = self.points.shape[1]
        on_hull = np.zeros(len(self.points), dtype=bool)
        on_hull[self.hull_idx] = True
        on_pareto = np.zeros(len(self.points), dtype=bool)
        on_pareto[self.pareto_idx] = True
        rational = self.rational_mask()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [f"u{i + 1}" for i in range(k)]
                + ["isHull", "isPareto", "isIndividuallyRational"]
            )
            for r in range(len(self.points)):
                writer.writerow(
                    [repr(float(v)) for v in self.points[r]]
                    + [int(on_hull[r]), int(on_pareto[r]), int(rational[r])]
                )


def _accumulate_states(per_state, mu):
    """Cartesian accumulation of per-state (utilities, action indices).

    Returns expected points (n, K) and per-state action-index combos (n, S),
    ordered row-major over the per-state lists (state 0 slowest).
    """
    pts = mu[0] * per_state[0][0]
    combos = per_state[0][1][:, None]
    for s in range(1, len(per_state)):
        U, idx = per_state[s]
        n, a = pts.shape[0], U.shape[0]
        pts = (pts[:, None, :] + mu[s] * U[None, :, :]).reshape(n * a, -1)
        combos = np.hstack(
            [
                np.repeat(combos, a, axis=0),
                np.tile(idx, n)[:, None],
            ]
        )
    return pts, combos


def enumeration_budget(budget: int | None = None) -> int:
    if budget is not None:
        return int(budget)
    return int(os.environ.get(ENUM_BUDGET_ENV, DEFAULT_ENUM_BUDGET))


def feasible_region(
    spec: GameSpec,
    f: EfficiencyFunction,
    chain: MarkovChannel,
    method: str = "auto",
    budget: int | None = None,
) -> UtilityRegion:
    """Feasible and individually-rational long-run utility region.

    ``enumerate`` walks every pure stationary state-feedback policy.
    ``minkowski`` combines per-state hull vertices only -- exact for the
    hull (expected utility is a state-separable average) and used
    automatically when enumeration would exceed the budget (default 1e7
    policies, env override POWERGAMES_ENUM_BUDGET).
    """
    if method not in ("auto", "enumerate", "minkowski"):
        raise ValueError(f"unknown region method {method!r}")
    mu = stationary_distribution(chain)
    actions = joint_actions(spec)
    state_utils = [
        action_utilities(spec, f, chain.states[s], actions)
        for s in range(chain.num_states)
    ]
    n_policies = float(actions.shape[0]) ** chain.num_states
    if method == "auto":
        method = "enumerate" if n_policies <= enumeration_budget(budget) else "minkowski"
    if method == "enumerate":
        per_state = [(U, np.arange(actions.shape[0], dtype=np.intp)) for U in state_utils]
    else:
        per_state = []
        for U in state_utils:
            idx = hull_indices(U)
            idx = np.sort(idx)
            per_state.append((U[idx], idx))
    points, combos = _accumulate_states(per_state, mu)
    hull_idx = hull_indices(points)
    hull_pareto = pareto_mask(points[hull_idx])
    vbar = minmax(spec, f, chain, method="exhaustive")
    return UtilityRegion(
        points=points,
        policy_actions=combos,
        actions=actions,
        hull_idx=hull_idx,
        pareto_idx=hull_idx[hull_pareto],
        minmax=vbar,
        stationary=mu,
        method=method,
    )


def social_optimum(
    region: UtilityRegion,
    weights=None,
    require_rational: bool = True,
) -> tuple[np.ndarray, StationaryPolicy]:
    """Best weighted-sum utility point among (individually rational) policies.

    Ties break to the lexicographically smallest per-state action index
    vector.  The winning point, lying in the individually-rational region,
    is an equilibrium utility of the stochastic game for small enough
    discounting; only the utility target and its generating policy are
    returned, not a supporting strategy.
    """
    k = region.points.shape[1]
    alpha = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    if alpha.shape != (k,) or np.any(alpha < 0) or alpha.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    mask = region.rational_mask() if require_rational else np.ones(len(region.points), bool)
    if not mask.any():
        raise EmptyRegionError("no feasible point is individually rational")
    scores = region.points @ alpha
    smax = scores[mask].max()
    cands = np.nonzero(mask & (scores == smax))[0]
    order = np.lexsort(region.policy_actions[cands].T[::-1])
    best = int(cands[order[0]])
    return region.points[best].copy(), region.policy(best)


@dataclass
class StateSpreadReport:
    """Initial-state sensitivity of discounted values for a reference policy."""

    discounts: np.ndarray  # (L,)
    spreads: np.ndarray  # (L,) max over players of value spread across initial states
    values: np.ndarray  # (L, S, K) discounted value per initial state and player
    policy: StationaryPolicy


def myopic_social_policy(
    spec: GameSpec, f: EfficiencyFunction, chain: MarkovChannel
) -> StationaryPolicy:
    """Per state, the joint grid action maximizing the stage welfare (ties: lowest index)."""
    actions = joint_actions(spec)
    rows = []
    for s in range(chain.num_states):
        U = action_utilities(spec, f, chain.states[s], actions)
        rows.append(actions[int(np.argmax(U.sum(axis=1)))])
    return StationaryPolicy(np.array(rows))


def initial_state_spread(
    spec: GameSpec,
    f: EfficiencyFunction,
    chain: MarkovChannel,
    discounts,
    policy: StationaryPolicy | None = None,
) -> StateSpreadReport:
    """Discounted value of a fixed policy from every initial state, per discount.

    Solves (I - (1-d) * kernel) V = d * stage_utilities exactly; the max
    spread across initial states shrinks to zero as the discount vanishes,
    which is the numerical footprint of initial-state independence.
    """
    if not is_irreducible(chain):
        raise NonIrreducibleError("probe requires an irreducible kernel")
    if policy is None:
        policy = myopic_social_policy(spec, f, chain)
    _check_policy(spec, chain, policy)
    discounts = np.asarray(discounts, dtype=float)
    stage = np.array(
        [
            utilities(spec, f, chain.states[s], policy.powers[s])
            for s in range(chain.num_states)
        ]
    )
    S = chain.num_states
    values = np.empty((discounts.size, S, spec.players))
    for j, d in enumerate(discounts):
        if not 0.0 < d < 1.0:
            raise ValueError("discounts must lie in (0, 1)")
        values[j] = np.linalg.solve(np.eye(S) - (1.0 - d) * chain.kernel, d * stage)
    spreads = (values.max(axis=1) - values.min(axis=1)).max(axis=1)
    return StateSpreadReport(discounts, spreads, values, policy)
