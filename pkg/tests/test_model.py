import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mp_oracle
from bgnbd_churn.errors import DomainError, NumericRangeError, UsageError
from bgnbd_churn.model import (
    ChurnQuery,
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
from sampling import params_st, random_tuples, summary_st

PAPER_LIKE = ModelParams(r=0.5, alpha=10.0, a=1.0, b=2.5)
HEAVY = ModelParams(r=0.25, alpha=4.0, a=0.8, b=2.4)


# --- data types -----------------------------------------------------------------


@pytest.mark.parametrize("field", ["r", "alpha", "a", "b"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_params_reject_non_positive(field, bad):
    values = dict(r=1.0, alpha=1.0, a=1.0, b=1.0)
    values[field] = bad
    with pytest.raises(DomainError):
        ModelParams(**values)


@pytest.mark.parametrize(
    "x, t_x, T",
    [(-1, 0, 5), (2, 6, 5), (0, 3, 5), (1.5, 1, 5), (1, -1, 5), (1, 1, math.inf)],
)
def test_summary_invariants(x, t_x, T):
    with pytest.raises(DomainError):
        CustomerSummary(x, t_x, T)


def test_query_requires_positive_window():
    with pytest.raises(DomainError):
        ChurnQuery(0)


# --- effective horizon --------------------------------------------------------------


def test_effective_horizon_worked_example():
    # last purchase 20 days ago, 30-day window: 10 days remain
    assert effective_horizon(CustomerSummary(3, 20, 40), ChurnQuery(30)) == 10


def test_effective_horizon_already_inactive():
    assert effective_horizon(CustomerSummary(1, 5, 50), ChurnQuery(30)) == 0.0


def test_effective_horizon_purchase_today():
    assert effective_horizon(CustomerSummary(4, 17, 17), ChurnQuery(30)) == 30


def test_effective_horizon_exactly_m_days_is_zero():
    assert effective_horizon(CustomerSummary(2, 10, 40), ChurnQuery(30)) == 0.0


# --- log-likelihood -----------------------------------------------------------------


@given(params_st, st.floats(min_value=0.0, max_value=3650.0))
def test_log_likelihood_no_repeat_closed_form(params, T):
    expected = params.r * math.log(params.alpha / (params.alpha + T))
    assert log_likelihood(params, CustomerSummary(0, 0, T)) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_log_likelihood_against_oracle():
    # 50-digit evaluation of the likelihood
    assert log_likelihood(PAPER_LIKE, CustomerSummary(5, 30, 40)) == pytest.approx(
        -17.6560564114886028583, rel=1e-12
    )


def test_log_likelihood_large_x_is_finite():
    value = log_likelihood(HEAVY, CustomerSummary(200, 300, 365))
    assert value == pytest.approx(-295.626158633912958991, rel=1e-12)
    assert math.isfinite(log_likelihood(HEAVY, CustomerSummary(10000, 3000, 3000)))


def test_log_likelihood_matches_oracle_randomized():
    for params, summary, _ in random_tuples(31, 300, list(range(51))):
        expected = mp_oracle.likelihood(params.r, params.alpha, params.a, params.b, summary.x, summary.t_x, summary.T)
        got = math.exp(log_likelihood(params, summary))
        assert abs(got - float(expected)) <= 1e-9 * float(expected)


def test_log_likelihoods_vectorised_matches_scalar():
    tuples = random_tuples(4, 200, [0, 1, 3, 40, 700])
    params = tuples[0][0]
    summaries = [s for _, s, _ in tuples]
    vec = log_likelihoods(params, [s.x for s in summaries], [s.t_x for s in summaries], [s.T for s in summaries])
    np.testing.assert_allclose(vec, [log_likelihood(params, s) for s in summaries], rtol=1e-13)


def test_dataset_log_likelihood_singleton_and_additivity():
    s = CustomerSummary(5, 30, 40)
    single = dataset_log_likelihood(PAPER_LIKE, [s])
    assert single == log_likelihood(PAPER_LIKE, s)
    assert dataset_log_likelihood(PAPER_LIKE, [s, s]) == 2 * single


def test_dataset_log_likelihood_rejects_empty():
    with pytest.raises(UsageError):
        dataset_log_likelihood(PAPER_LIKE, [])


def test_dataset_log_likelihood_order_independent():
    summaries = [s for _, s, _ in random_tuples(8, 500, [0, 1, 2, 5, 30])]
    base = dataset_log_likelihood(HEAVY, summaries)
    rng = np.random.default_rng(0)
    for _ in range(5):
        shuffled = [summaries[i] for i in rng.permutation(len(summaries))]
        assert dataset_log_likelihood(HEAVY, shuffled) == base


# --- reference evaluator --------------------------------------------------------------


def test_reference_at_t_zero_is_one():
    assert churn_probability_reference(PAPER_LIKE, CustomerSummary(5, 30, 40), 0.0) == 1.0


def test_reference_no_repeat_closed_form():
    params = ModelParams(1.0, 10.0, 1.0, 1.0)
    assert churn_probability_reference(params, CustomerSummary(0, 0, 10), 20.0) == pytest.approx(0.5, rel=1e-15)


def test_reference_against_oracle():
    # 50-digit evaluation: 0.447277455591254702205903873273
    value = churn_probability_reference(PAPER_LIKE, CustomerSummary(5, 30, 40), 20.0)
    assert value == pytest.approx(0.447277455591254702, rel=1e-12)


def test_reference_raises_instead_of_nan():
    with pytest.raises(NumericRangeError):
        churn_probability_reference(HEAVY, CustomerSummary(500, 300, 365), 30.0)
    with pytest.raises(NumericRangeError):
        churn_probability_reference(HEAVY, CustomerSummary(10000, 3000, 3650), 30.0)
    # base below one raised to a large positive power
    with pytest.raises(NumericRangeError):
        churn_probability_reference(ModelParams(0.5, 0.1, 1.0, 1.0), CustomerSummary(400, 0.0, 0.5), 1.0)


# --- stable evaluator ------------------------------------------------------------------------


def test_stable_at_t_zero_is_exactly_one():
    assert churn_probability(PAPER_LIKE, CustomerSummary(5, 30, 40), 0.0) == 1.0
    assert churn_probability(HEAVY, CustomerSummary(10000, 1000, 3650), 0.0) == 1.0


def test_stable_no_repeat_closed_form():
    params = ModelParams(1.0, 10.0, 1.0, 1.0)
    assert churn_probability(params, CustomerSummary(0, 0, 10), 20.0) == pytest.approx(0.5, rel=1e-15)


def test_stable_against_oracle():
    value = churn_probability(PAPER_LIKE, CustomerSummary(5, 30, 40), 20.0)
    assert value == pytest.approx(0.447277455591254702, rel=1e-12)


def test_stable_large_x():
    # 50-digit value is 1 - 5.008e-40, which is 1.0 in float64
    assert churn_probability(HEAVY, CustomerSummary(500, 300, 365), 30.0) == 1.0
    # a recent buyer with the same frequency: 0.00616295812066452
    value = churn_probability(HEAVY, CustomerSummary(500, 364, 365), 30.0)
    assert value == pytest.approx(0.00616295812066452, rel=1e-9)
    assert churn_probability(HEAVY, CustomerSummary(500, 364, 365), 0.5) == pytest.approx(0.510975195765272, rel=1e-9)


def test_stable_rejects_negative_t():
    with pytest.raises(DomainError):
        churn_probability(PAPER_LIKE, CustomerSummary(5, 30, 40), -1.0)
    with pytest.raises(DomainError):
        churn_probabilities(PAPER_LIKE, [5], [30], [40], [math.nan])


def test_stable_matches_oracle_randomized():
    for params, summary, t in random_tuples(77, 150, [0, 1, 2, 10, 50, 120, 300, 500]):
        expected = float(mp_oracle.no_purchase_probability(
            params.r, params.alpha, params.a, params.b, summary.x, summary.t_x, summary.T, t
        ))
        assert churn_probability(params, summary, t) == pytest.approx(expected, rel=1e-9)


@settings(max_examples=300)
@given(params_st, summary_st(), st.floats(min_value=0.0, max_value=365.0))
def test_stable_agrees_with_reference(params, summary, t):
    try:
        reference = churn_probability_reference(params, summary, t)
    except NumericRangeError:
        return
    assert abs(churn_probability(params, summary, t) - reference) <= 1e-10


@settings(max_examples=200)
@given(params_st, summary_st(max_x=20000), st.floats(min_value=0.0, max_value=3650.0))
def test_stable_in_unit_interval(params, summary, t):
    p = churn_probability(params, summary, t)
    assert 0.0 <= p <= 1.0


@settings(max_examples=100)
@given(params_st, summary_st(max_x=2000))
def test_stable_non_increasing_in_t(params, summary):
    ts = np.linspace(0.0, 120.0, 50)
    probs = churn_probabilities(params, summary.x, summary.t_x, summary.T, ts)
    assert np.all(np.diff(probs) <= 1e-12)


@given(params_st, st.floats(min_value=0.0, max_value=730.0), st.floats(min_value=0.0, max_value=365.0))
def test_stable_no_repeat_closed_form_property(params, T, t):
    expected = ((params.alpha + T) / (params.alpha + T + t)) ** params.r
    assert churn_probability(params, CustomerSummary(0, 0, T), t) == pytest.approx(expected, rel=1e-12)


def test_vectorised_probabilities_match_scalar():
    tuples = random_tuples(12, 300, [0, 1, 7, 60, 900, 10000])
    params = tuples[0][0]
    x = [s.x for _, s, _ in tuples]
    t_x = [s.t_x for _, s, _ in tuples]
    T = [s.T for _, s, _ in tuples]
    t = [t for _, _, t in tuples]
    vec = churn_probabilities(params, x, t_x, T, t)
    scalar = [churn_probability(params, s, tt) for (_, s, tt) in tuples]
    np.testing.assert_allclose(vec, scalar, rtol=1e-12, atol=1e-300)


# --- windowed score ----------------------------------------------------------------------


def test_window_already_churned():
    score = churn_probability_window(PAPER_LIKE, CustomerSummary(2, 5, 50), ChurnQuery(30))
    assert score.probability == 1.0
    assert score.already_churned
    assert score.effective_horizon == 0.0


def test_window_no_repeat_composition():
    params = ModelParams(1.0, 10.0, 1.0, 1.0)
    # (t_x=20, T=40) with x=0 breaks the summary invariant, so compose the
    # horizon and the x=0 probability separately
    horizon = effective_horizon(CustomerSummary(1, 20, 40), ChurnQuery(30))
    assert horizon == 10
    p = churn_probabilities(params, 0, 20.0, 40.0, horizon)
    assert float(p) == pytest.approx(50.0 / 60.0, rel=1e-14)
    score = churn_probability_window(params, CustomerSummary(0, 0, 20), ChurnQuery(30))
    assert score.effective_horizon == 10
    assert score.probability == pytest.approx(30.0 / 40.0, rel=1e-14)


def test_window_matches_reference_example():
    score = churn_probability_window(PAPER_LIKE, CustomerSummary(5, 30, 40), ChurnQuery(30))
    assert score.effective_horizon == 20
    assert not score.already_churned
    assert score.probability == pytest.approx(0.447277455591254702, rel=1e-12)


@given(params_st, summary_st(max_x=5000), st.floats(min_value=0.5, max_value=120.0))
def test_window_guarantees_one_when_inactive_for_m_days(params, summary, M):
    score = churn_probability_window(params, summary, ChurnQuery(M))
    if summary.T - summary.t_x >= M:
        assert score.probability == 1.0 and score.already_churned
    else:
        assert not score.already_churned
        assert score.effective_horizon == pytest.approx(M - (summary.T - summary.t_x))
