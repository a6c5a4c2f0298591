"""Energy-efficient power-control games.

A numerical engine for multiple-access power control with selfish
energy-efficiency payoffs: closed-form one-shot equilibria, the SINR-fair
cooperative point, grim-trigger cooperation in discounted repeated play
under public monitoring, and long-run utility regions over Markov channel
states.  The CLI reproduces the two standard desk-scale experiments.
"""

__version__ = "0.1.0"

from .efficiency import (
    EfficiencyFunction,
    LoadShape,
    PacketSuccess,
    RateExp,
    UniquenessReport,
    equilibrium_sinr,
    fair_sinr,
    fair_uniqueness,
)
from .errors import (
    EmptyRegionError,
    GridMissingError,
    InfeasibleLoadError,
    NonIrreducibleError,
    NoRootError,
    PowerGameError,
    ScenarioError,
    UniquenessConditionError,
)
from .game import (
    GameSpec,
    TargetProfile,
    best_response,
    fair_powers,
    nash_powers,
    sinr,
    sinr_all,
    utilities,
)
from .repeated import (
    EquilibriumAudit,
    RepeatedGameConfig,
    RepeatedGameTrace,
    TriggerPolicy,
    audit_equilibrium,
    default_horizon,
    deviate_once,
    discount_threshold,
    grim_trigger_policies,
    public_signal,
    run_repeated_game,
)
from .scenario import Scenario, SweepConfig, load_scenario, max_feasible_players
from .stochastic import (
    MarkovChannel,
    StationaryPolicy,
    StateSpreadReport,
    UtilityRegion,
    expected_utility,
    feasible_region,
    initial_state_spread,
    is_irreducible,
    minmax,
    myopic_social_policy,
    social_optimum,
    stationary_distribution,
)
from .experiments import (
    GainRow,
    MarkedPoint,
    RegionArtifacts,
    SweepCurve,
    run_gain_sweep,
    run_region_experiment,
    write_region_artifacts,
    write_sweep_artifacts,
)

__all__ = [
    "__version__",
    # efficiency
    "EfficiencyFunction",
    "LoadShape",
    "PacketSuccess",
    "RateExp",
    "UniquenessReport",
    "equilibrium_sinr",
    "fair_sinr",
    "fair_uniqueness",
    # errors
    "PowerGameError",
    "NoRootError",
    "InfeasibleLoadError",
    "UniquenessConditionError",
    "NonIrreducibleError",
    "GridMissingError",
    "EmptyRegionError",
    "ScenarioError",
    # one-shot game
    "GameSpec",
    "TargetProfile",
    "sinr",
    "sinr_all",
    "utilities",
    "nash_powers",
    "fair_powers",
    "best_response",
    # repeated play
    "RepeatedGameConfig",
    "RepeatedGameTrace",
    "TriggerPolicy",
    "EquilibriumAudit",
    "public_signal",
    "discount_threshold",
    "default_horizon",
    "grim_trigger_policies",
    "deviate_once",
    "run_repeated_game",
    "audit_equilibrium",
    # stochastic game
    "MarkovChannel",
    "StationaryPolicy",
    "StateSpreadReport",
    "UtilityRegion",
    "is_irreducible",
    "stationary_distribution",
    "expected_utility",
    "minmax",
    "feasible_region",
    "social_optimum",
    "myopic_social_policy",
    "initial_state_spread",
    # scenarios and experiments
    "Scenario",
    "SweepConfig",
    "load_scenario",
    "max_feasible_players",
    "MarkedPoint",
    "RegionArtifacts",
    "GainRow",
    "SweepCurve",
    "run_region_experiment",
    "write_region_artifacts",
    "run_gain_sweep",
    "write_sweep_artifacts",
]
