"""Energy-constrained sensor collaboration design for LMMSE estimation of
time-varying parameters: problem construction, distortion evaluation, the
convexification solvers, and a reproducible experiment harness."""

from .model import (
    CollaborationTopology,
    CorrelationSpec,
    ProblemInstance,
    SolverView,
    assemble_instance,
    build_embedding,
    default_instance,
    generate_rgg,
    instance_from_json,
    instance_to_json,
    ou_covariance,
    random_instance,
    standard_view,
    time_invariant_view,
)
from .estimator import (
    CollaborationPlan,
    ErrorReport,
    distortion_uncorrelated,
    error_covariance_correlated,
    error_covariance_general,
    evaluation_report,
    simulate_mse,
    transmission_cost,
)
from .reports import SolveReport, write_trajectory_csv

__version__ = "0.1.0"

__all__ = [
    "CollaborationTopology", "CorrelationSpec", "ProblemInstance",
    "SolverView", "assemble_instance", "build_embedding", "default_instance",
    "generate_rgg", "instance_from_json", "instance_to_json", "ou_covariance",
    "random_instance", "standard_view", "time_invariant_view",
    "CollaborationPlan", "ErrorReport", "distortion_uncorrelated",
    "error_covariance_correlated", "error_covariance_general",
    "evaluation_report", "simulate_mse", "transmission_cost", "SolveReport",
    "write_trajectory_csv", "__version__",
]
