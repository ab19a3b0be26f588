"""Risk-constrained LQ regulation of partially observed LTI systems.

Library layout:

- model:          plant matrices, structural (PBH) validation, regulation targets
- noise:          Gaussian-mixture / empirical noise models and moment bundles
- risk_transform: predictive-variance constraints -> inflated-penalty LQ data
- estimator:      correlated-noise Kalman covariance plan and filter step
- controller:     finite/infinite-horizon affine risk-averse synthesis
- leqg:           exponential-quadratic baseline with breakdown detection
- evaluation:     closed-loop Monte-Carlo, duality verification, tabulation
- cli:            config-driven experiment runner (`risklqg run|gains|tune`)
"""

__version__ = "0.1.0"

from .controller import (
    PolicySchedule,
    SteadyStatePolicy,
    ValueParams,
    convergence_profile,
    load_gains,
    save_gains,
    synthesize_finite,
    synthesize_infinite,
)
from .estimator import FilterCovariancePlan, FilterState, filter_step, plan_covariances
from .evaluation import (
    EvaluationSummary,
    TrajectoryRecord,
    dual_ascent,
    lemma2_check,
    simulate,
    summarize,
    tabulate_multipliers,
    verify_kkt,
)
from .leqg import BreakdownReport, LeqgConfig, find_breakdown_theta, synthesize_leqg
from .model import (
    LtiSystem,
    RegulationTarget,
    StructureReport,
    equilibrium_target,
    make_regulation_target,
    validate_system,
)
from .noise import (
    EmpiricalSource,
    GaussianMixture,
    JointNoiseModel,
    NoiseMoments,
    moments_analytic,
    moments_empirical,
    sample,
)
from .risk_transform import (
    RiskWeights,
    TransformedProblem,
    constraint_increment_output,
    constraint_increment_state,
    expected_sq_deviation_output,
    expected_sq_deviation_state,
    transform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
