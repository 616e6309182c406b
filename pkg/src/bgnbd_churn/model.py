"""
BG/NBD likelihood and the probability of no purchases in a future window.

Time is measured in days from a customer's first purchase day.  ``x`` is the
number of repeat purchase days, ``t_x`` the day of the last purchase and ``T``
the customer's age at the scoring date.

Two evaluators of the zero-purchase probability live here:

* :func:`churn_probability` works entirely with log-weights, shifting by the
  larger exponent before exponentiating, and stays finite for any ``x``.
* :func:`churn_probability_reference` evaluates the same ratio directly in
  float64.  It overflows or underflows once ``x`` gets large and exists only
  to cross-check the stable path.
"""
import math
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, NumericRangeError, UsageError
from .special import log_beta, log_gamma, log_sum_exp2

__all__ = [
    "ModelParams",
    "CustomerSummary",
    "ChurnQuery",
    "ChurnScore",
    "effective_horizon",
    "log_likelihood",
    "log_likelihoods",
    "dataset_log_likelihood",
    "churn_probability",
    "churn_probabilities",
    "churn_probability_reference",
    "churn_probability_window",
]

# Largest overshoot above 1 that is attributed to rounding and clamped away.
CLAMP_SLACK = 1e-12


def _positive_finite(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelParams:
    """The four BG/NBD parameters.

    ``r`` and ``alpha`` are the shape and rate (per day) of the Gamma
    distribution of purchase rates; ``a`` and ``b`` are the Beta shapes of the
    per-purchase dropout probability.
    """

    r: float
    alpha: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("r", "alpha", "a", "b"):
            object.__setattr__(self, name, _positive_finite(name, getattr(self, name)))

    def as_tuple(self):
        return (self.r, self.alpha, self.a, self.b)


@dataclass(frozen=True)
class CustomerSummary:
    """Sufficient statistics (x, t_x, T) of one customer, in days."""

    x: int
    t_x: float
    T: float

    def __post_init__(self):
        x, t_x, T = self.x, float(self.t_x), float(self.T)
        if isinstance(x, float):
            if not x.is_integer():
                raise DomainError(f"x must be a whole number, got {x!r}")
        x = int(x)
        if x < 0:
            raise DomainError(f"x must be non-negative, got {x}")
        if not (math.isfinite(t_x) and math.isfinite(T)):
            raise DomainError("t_x and T must be finite")
        if not 0.0 <= t_x <= T:
            raise DomainError(f"need 0 <= t_x <= T, got t_x={t_x!r}, T={T!r}")
        if x == 0 and t_x != 0.0:
            raise DomainError(f"a customer with x=0 must have t_x=0, got {t_x!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t_x", t_x)
        object.__setattr__(self, "T", T)


@dataclass(frozen=True)
class ChurnQuery:
    """Churn means no purchase for ``M`` consecutive days."""

    M: float

    def __post_init__(self):
        object.__setattr__(self, "M", _positive_finite("M", self.M))


@dataclass(frozen=True)
class ChurnScore:
    probability: float
    effective_horizon: float
    already_churned: bool


def effective_horizon(summary, query):
    """Days left after ``T`` until the customer has gone ``M`` days without buying.

    Zero once the current inactivity gap ``T - t_x`` has reached ``M``.
    """
    gap = summary.T - summary.t_x
    if gap >= query.M:
        return 0.0
    return query.M - gap


# --- log-weights ---------------------------------------------------------


def _recency_weight(r, alpha, a, b, x, t_x):
    """ln[B(a+1, b+x-1) (alpha+t_x)^-(r+x)], or -inf where x == 0."""
    if np.ndim(x) == 0:
        if x == 0:
            return -math.inf
        return log_beta(a + 1.0, b + x - 1.0) - (r + x) * math.log(alpha + t_x)
    x = np.asarray(x, dtype=np.float64)
    repeat = x > 0
    xs = np.where(repeat, x, 1.0)
    weight = log_beta(a + 1.0, b + xs - 1.0) - (r + xs) * np.log(alpha + t_x)
    return np.where(repeat, weight, -np.inf)


def _log(value):
    return math.log(value) if np.ndim(value) == 0 else np.log(value)


def _log_likelihood(r, alpha, a, b, x, t_x, T):
    alive = log_beta(a, b + x) - (r + x) * _log(alpha + T)
    dead = _recency_weight(r, alpha, a, b, x, t_x)
    return (
        log_gamma(r + x)
        - log_gamma(r)
        + r * math.log(alpha)
        - log_beta(a, b)
        + log_sum_exp2(alive, dead)
    )


def log_likelihood(params, summary):
    """Log-likelihood of one customer's (x, t_x, T), computed in log space."""
    r, alpha, a, b = params.as_tuple()
    return _log_likelihood(r, alpha, a, b, summary.x, summary.t_x, summary.T)


def log_likelihoods(params, x, t_x, T):
    """Vectorised :func:`log_likelihood` over arrays of summary columns."""
    r, alpha, a, b = params.as_tuple()
    x = np.asarray(x, dtype=np.float64)
    t_x = np.asarray(t_x, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    return _log_likelihood(r, alpha, a, b, x, t_x, T)


def dataset_log_likelihood(params, summaries):
    """Sum of per-customer log-likelihoods.

    The sum is exactly rounded (``math.fsum``), so the result does not depend
    on the order of ``summaries``.
    """
    summaries = list(summaries)
    if not summaries:
        raise UsageError("dataset_log_likelihood needs at least one summary")
    x = np.array([s.x for s in summaries], dtype=np.float64)
    t_x = np.array([s.t_x for s in summaries], dtype=np.float64)
    T = np.array([s.T for s in summaries], dtype=np.float64)
    return math.fsum(log_likelihoods(params, x, t_x, T).tolist())


# --- zero-purchase probability ----------------------------------------------


def _clamp(p):
    if np.ndim(p) == 0:
        if p > 1.0:
            if p - 1.0 > CLAMP_SLACK:
                raise ConsistencyError(f"probability {p!r} exceeds 1 beyond rounding")
            return 1.0
        return p
    if np.any(p - 1.0 > CLAMP_SLACK):
        raise ConsistencyError("probability exceeds 1 beyond rounding")
    return np.minimum(p, 1.0)


def _stable_probability(r, alpha, a, b, x, t_x, T, t):
    log_tail = log_beta(a, b + x)
    k_e = _recency_weight(r, alpha, a, b, x, t_x)
    k_f = log_tail - (r + x) * _log(alpha + T + t)
    k_g = log_tail - (r + x) * _log(alpha + T)
    log_ratio = log_sum_exp2(k_e, k_f) - log_sum_exp2(k_e, k_g)
    if np.ndim(log_ratio) == 0:
        return _clamp(math.exp(log_ratio))
    return _clamp(np.exp(log_ratio))


def _check_t(t):
    if np.ndim(t) == 0:
        if not (math.isfinite(t) and t >= 0.0):
            raise DomainError(f"t must be finite and non-negative, got {t!r}")
    elif not np.all(np.isfinite(t) & (t >= 0.0)):
        raise DomainError("t must be finite and non-negative everywhere")


def churn_probability(params, summary, t):
    """P(no purchase in (T, T + t]) given the customer's history.

    Each of the three power terms is carried as a log-weight, the two sums
    are formed with :func:`log_sum_exp2`, and only their difference is
    exponentiated.  Finite for any ``x``; exactly 1 when ``t == 0``.
    """
    t = float(t)
    _check_t(t)
    r, alpha, a, b = params.as_tuple()
    return _stable_probability(r, alpha, a, b, summary.x, summary.t_x, summary.T, t)


def churn_probabilities(params, x, t_x, T, t):
    """Vectorised :func:`churn_probability` over arrays of summary columns.

    Callers must supply columns that satisfy the CustomerSummary invariants.
    """
    x = np.asarray(x, dtype=np.float64)
    t_x = np.asarray(t_x, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    _check_t(t)
    r, alpha, a, b = params.as_tuple()
    return _stable_probability(r, alpha, a, b, x, t_x, T, t)


def _normal(name, value):
    if not math.isfinite(value):
        raise NumericRangeError(f"{name} overflowed ({value!r})")
    if abs(value) < sys.float_info.min:
        raise NumericRangeError(f"{name} underflowed ({value!r})")
    return value


def _beta_direct(name, a, b):
    try:
        value = math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    except OverflowError:
        raise NumericRangeError(f"{name} overflowed in the gamma function") from None
    return _normal(name, value)


def _power(name, base, exponent):
    try:
        value = base ** exponent
    except OverflowError:
        raise NumericRangeError(f"{name} overflowed") from None
    return _normal(name, value)


def churn_probability_reference(params, summary, t):
    """Direct float64 evaluation of the zero-purchase probability.

    Computes the Beta functions from ``math.gamma`` and the powers with
    ``**``, then takes the ratio.  Any intermediate that overflows, underflows
    or turns subnormal raises NumericRangeError; in practice that starts to
    happen once ``x`` passes roughly 50-100 for ordinary parameters.
    """
    t = float(t)
    _check_t(t)
    r, alpha, a, b = params.as_tuple()
    x, t_x, T = summary.x, summary.t_x, summary.T
    phi = -(r + x)

    tail = _beta_direct("B(a, b+x)", a, b + x)
    num = tail * _power("(alpha+T+t)^phi", alpha + T + t, phi)
    den = tail * _power("(alpha+T)^phi", alpha + T, phi)
    if x > 0:
        recency = _beta_direct("B(a+1, b+x-1)", a + 1.0, b + x - 1.0)
        recency *= _power("(alpha+t_x)^phi", alpha + t_x, phi)
        num += recency
        den += recency
    p = _normal("numerator", num) / _normal("denominator", den)
    return _clamp(p)


def churn_probability_window(params, summary, query):
    """Probability that the customer goes ``query.M`` days without a purchase.

    A customer already inactive for ``M`` days gets exactly 1 without any
    arithmetic; otherwise the window is the remaining effective horizon.
    """
    horizon = effective_horizon(summary, query)
    if horizon == 0.0:
        return ChurnScore(probability=1.0, effective_horizon=0.0, already_churned=True)
    return ChurnScore(
        probability=churn_probability(params, summary, horizon),
        effective_horizon=horizon,
        already_churned=False,
    )
