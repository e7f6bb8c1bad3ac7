"""Transmit-covariance designs trading radar beampattern fidelity against wireless power."""

from .designs import (
    DesignResult,
    RecoveryError,
    SolverFailure,
    beamformer_covariance,
    optimal_design,
    radar_only,
    randomization_baseline,
    rank1_reconstruct,
    solve_relaxed,
    suboptimal_design,
    wpt_only,
    wpt_power_targets,
)
from .metrics import MetricReport, beampattern, harvested_power, objective, radar_loss, wpt_loss
from .scenario import Scenario, ScenarioConfig, build_scenario, config_from_dict, load_config
from .solver import (
    AffineFunctional,
    LsSdpProblem,
    SolverReport,
    SolverSettings,
    build_relaxed_problem,
    build_suboptimal_problem,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AffineFunctional",
    "DesignResult",
    "LsSdpProblem",
    "MetricReport",
    "RecoveryError",
    "Scenario",
    "ScenarioConfig",
    "SolverFailure",
    "SolverReport",
    "SolverSettings",
    "beamformer_covariance",
    "beampattern",
    "build_relaxed_problem",
    "build_scenario",
    "build_suboptimal_problem",
    "config_from_dict",
    "harvested_power",
    "load_config",
    "objective",
    "optimal_design",
    "radar_loss",
    "radar_only",
    "randomization_baseline",
    "rank1_reconstruct",
    "solve",
    "solve_relaxed",
    "suboptimal_design",
    "wpt_loss",
    "wpt_only",
    "wpt_power_targets",
]
