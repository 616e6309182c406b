"""BG/NBD churn scoring with a log-domain zero-purchase probability."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConsistencyError,
    DateRangeError,
    DomainError,
    IdentifiabilityError,
    NumericRangeError,
    ParseError,
    UsageError,
)
from .model import (  # noqa: E402
    ChurnQuery,
    ChurnScore,
    CustomerSummary,
    ModelParams,
    churn_probabilities,
    churn_probability,
    churn_probability_reference,
    churn_probability_window,
    dataset_log_likelihood,
    effective_horizon,
    log_likelihood,
    log_likelihoods,
)
from .fit import FitConfig, FitReport, fit, nelder_mead  # noqa: E402
