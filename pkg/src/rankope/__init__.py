"""Off-policy evaluation of deterministic ranking policies from logged clicks."""
from .clicks import (
    ClickBatch,
    Scenario,
    UserModel,
    generate_dataset,
    power_curve,
    simulate_batch,
    simulate_clicks,
    toy_scenario,
    true_value,
)
from .core import (
    ClickRecord,
    EstimateReport,
    EstimatorConfig,
    Family,
    PositionBiasCurve,
    Ranking,
    RankPropensities,
    estimate,
    interpol_weight,
    ip_weight,
    pbm_weight,
    window_probability,
)
from .errors import (
    ConfigurationError,
    DataError,
    InputDomainError,
    InvalidCurveError,
    RankOPEError,
    SupportViolationError,
)
from .experiments import CellResult, ExperimentGrid, exhaustive_oracle, run_cell, run_grid
from .logging_policy import Sampler, SwapPolicy, propensity_matrix, sample

__version__ = "0.1.0"
