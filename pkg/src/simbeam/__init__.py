"""simbeam: wave-domain beamforming on a metasurface-equipped LEO satellite.

A numpy/scipy library that builds the diffraction-based transfer model of
a stacked programmable metasurface, generates statistical CSI for users on
the ground, maximizes the statistical sum-rate bound over phase shifts and
power allocation, schedules users and antennas, and runs seeded
experiment sweeps with digital-precoding baselines.
"""

__version__ = "0.1.0"

from .baselines import (
    DigitalPrecoder,
    mmse_precoder,
    random_controls,
    waterfill_exact,
    zf_precoder,
)
from .beamforming import (
    CascadeState,
    PhaseConfig,
    compose_cascade,
    phi_layer,
    wrap_phases,
)
from .channel import (
    ChannelDraw,
    ChannelStats,
    UserGeometry,
    draw_channels,
    sample_scenario,
    steering_vector,
)
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .harness import (
    ExperimentResult,
    TrialRecord,
    emit_outputs,
    evaluate_ergodic_rate,
    run_experiment,
    verify_outputs,
)
from .optimizer import (
    AOResult,
    AOSettings,
    ObjectiveContext,
    PowerAllocation,
    alternating_optimize,
    armijo_phase_step,
    gradient_theta,
    objective,
    objective_context,
    waterfill_step,
)
from .propagation import (
    PropagationModel,
    SimGeometry,
    build_propagation,
    rs_coefficient,
)
from .scheduler import (
    AntennaAssignment,
    GroupingPlan,
    coc,
    coc_matrix,
    greedy_grouping,
    grouping_objective,
    hungarian_assign,
    leakage_matrix,
    select_antennas,
)

__all__ = [
    "__version__",
    "SimGeometry",
    "PropagationModel",
    "rs_coefficient",
    "build_propagation",
    "PhaseConfig",
    "CascadeState",
    "wrap_phases",
    "phi_layer",
    "compose_cascade",
    "UserGeometry",
    "ChannelStats",
    "ChannelDraw",
    "sample_scenario",
    "steering_vector",
    "draw_channels",
    "PowerAllocation",
    "ObjectiveContext",
    "AOSettings",
    "AOResult",
    "objective_context",
    "objective",
    "waterfill_step",
    "gradient_theta",
    "armijo_phase_step",
    "alternating_optimize",
    "GroupingPlan",
    "AntennaAssignment",
    "coc",
    "coc_matrix",
    "grouping_objective",
    "greedy_grouping",
    "leakage_matrix",
    "hungarian_assign",
    "select_antennas",
    "DigitalPrecoder",
    "waterfill_exact",
    "zf_precoder",
    "mmse_precoder",
    "random_controls",
    "ScenarioConfig",
    "ConfigError",
    "parse_config",
    "load_config",
    "TrialRecord",
    "ExperimentResult",
    "run_experiment",
    "evaluate_ergodic_rate",
    "emit_outputs",
    "verify_outputs",
]
