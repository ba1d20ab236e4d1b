"""Trial-domain iterative learning control lab.

Lifted two-player learning updates on a sampled closed loop, with
cooperative-game bookkeeping over which players take part, convergence
and reachability diagnostics, and a desktop-printer benchmark.
"""
from . import _threads  # noqa: F401  (thread cap; must precede numpy imports)

from .errors import ConfigError, DivergenceError, IlcError, NumericalError
from .game import (
    Coalition,
    GameTrialReport,
    analyze_game,
    characteristic_value,
    coalition_policy,
    game_summary,
)
from .ilc import (
    ConvergenceMargin,
    CooperationMargin,
    CostBreakdown,
    GainSet,
    TrackabilityReport,
    Weights,
    asymptotic_error,
    asymptotic_input,
    asymptotic_trajectory,
    closed_form_input,
    convergence_margin,
    cooperation_margin,
    cost,
    input_to_output_map,
    stationarity_residuals,
    synthesize,
    trackability,
    update_end_to_end,
    update_noilc,
    update_serial_only,
)
from .lifted import (
    DiagonalWeight,
    LiftedOperator,
    Signal,
    apply,
    lift,
    weighted_norm_sq,
)
from .lti import (
    ClosedLoopModel,
    ContinuousStateSpace,
    ContinuousTransferFunction,
    DiscreteStateSpace,
    build_closed_loop,
    discretize_tustin,
    discretize_zoh,
    markov_parameters,
    spectral_radius,
    tf_to_state_space,
)
from .runner import (
    Discretization,
    ExperimentConfig,
    ExperimentResult,
    LiftedLoop,
    ReferenceSpec,
    TrialRecord,
    build_lifted_loop,
    case_study_config,
    default_reference,
    fixture_config,
    generate_reference,
    run_experiment,
    run_policy_trials,
    simulate_trial,
)

__version__ = "0.1.0"

__all__ = [
    "ClosedLoopModel",
    "Coalition",
    "ConfigError",
    "ContinuousStateSpace",
    "ContinuousTransferFunction",
    "ConvergenceMargin",
    "CooperationMargin",
    "CostBreakdown",
    "DiagonalWeight",
    "DiscreteStateSpace",
    "Discretization",
    "DivergenceError",
    "ExperimentConfig",
    "ExperimentResult",
    "GainSet",
    "GameTrialReport",
    "IlcError",
    "LiftedLoop",
    "LiftedOperator",
    "NumericalError",
    "ReferenceSpec",
    "Signal",
    "TrackabilityReport",
    "TrialRecord",
    "Weights",
    "analyze_game",
    "apply",
    "asymptotic_error",
    "asymptotic_input",
    "asymptotic_trajectory",
    "build_closed_loop",
    "build_lifted_loop",
    "case_study_config",
    "characteristic_value",
    "closed_form_input",
    "coalition_policy",
    "convergence_margin",
    "cooperation_margin",
    "cost",
    "default_reference",
    "discretize_tustin",
    "discretize_zoh",
    "fixture_config",
    "game_summary",
    "generate_reference",
    "input_to_output_map",
    "lift",
    "markov_parameters",
    "run_experiment",
    "run_policy_trials",
    "simulate_trial",
    "spectral_radius",
    "stationarity_residuals",
    "synthesize",
    "tf_to_state_space",
    "trackability",
    "update_end_to_end",
    "update_noilc",
    "update_serial_only",
    "weighted_norm_sq",
]
