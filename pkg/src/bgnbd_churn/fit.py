"""
Maximum-likelihood estimation of (r, alpha, a, b).

The search runs a Nelder-Mead simplex over the log of each parameter, so any
real vector maps to a valid parameter set.  Customers sharing the same
(x, t_x, T) are collapsed into weighted patterns before the search; the
pattern order is sorted, and the weighted log-likelihoods are added with
``math.fsum``, so the objective does not depend on the input order.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IdentifiabilityError, UsageError
from .model import ModelParams, _log_likelihood

__all__ = ["FitConfig", "FitReport", "NelderMeadResult", "nelder_mead", "fit", "MIN_CUSTOMERS"]

MIN_CUSTOMERS = 10

# reflection, expansion, contraction, shrink
_RHO, _CHI, _PSI, _SIGMA = 1.0, 2.0, 0.5, 0.5
_NONZERO_STEP = 0.05
_ZERO_STEP = 0.00025


@dataclass(frozen=True)
class FitConfig:
    initial_params: ModelParams = field(default_factory=lambda: ModelParams(1.0, 1.0, 1.0, 1.0))
    max_iterations: int = 10000
    objective_tolerance: float = 1e-9
    parameter_tolerance: float = 1e-8

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise UsageError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        for name in ("objective_tolerance", "parameter_tolerance"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise UsageError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class FitReport:
    params: ModelParams
    neg_log_likelihood: float
    iterations: int
    converged: bool
    objective_evaluations: int


@dataclass(frozen=True)
class NelderMeadResult:
    point: np.ndarray
    value: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(objective, initial_point, config):
    """Minimise ``objective`` with the classic Nelder-Mead simplex.

    Stops once every vertex lies within ``config.parameter_tolerance`` of the
    best one (max-norm) and every objective value within
    ``config.objective_tolerance`` of the best value, or after
    ``config.max_iterations`` iterations.  Non-finite objective values are
    treated as +inf.
    """
    x0 = np.atleast_1d(np.asarray(initial_point, dtype=np.float64)).copy()
    n = x0.size
    evaluations = 0

    def f(point):
        nonlocal evaluations
        evaluations += 1
        value = float(objective(point))
        return value if math.isfinite(value) else math.inf

    f0 = f(x0)
    if not math.isfinite(f0):
        raise UsageError("objective is not finite at the initial point")

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for k in range(n):
        vertex = x0.copy()
        vertex[k] += _NONZERO_STEP if vertex[k] != 0 else _ZERO_STEP
        sim[k + 1] = vertex
    fsim = np.empty(n + 1)
    fsim[0] = f0
    for k in range(1, n + 1):
        fsim[k] = f(sim[k])

    def done():
        return (
            np.max(np.abs(sim[1:] - sim[0])) <= config.parameter_tolerance
            and np.max(np.abs(fsim[1:] - fsim[0])) <= config.objective_tolerance
        )

    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]

    iterations = 0
    converged = False
    while iterations < config.max_iterations:
        if done():
            converged = True
            break
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = (1 + _RHO) * centroid - _RHO * worst
        fr = f(xr)
        shrink = False
        if fr < fsim[0]:
            xe = (1 + _RHO * _CHI) * centroid - _RHO * _CHI * worst
            fe = f(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-1]:
            xc = (1 + _PSI * _RHO) * centroid - _PSI * _RHO * worst
            fc = f(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
            else:
                shrink = True
        else:
            xcc = (1 - _PSI) * centroid + _PSI * worst
            fcc = f(xcc)
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
            else:
                shrink = True
        if shrink:
            for k in range(1, n + 1):
                sim[k] = sim[0] + _SIGMA * (sim[k] - sim[0])
                fsim[k] = f(sim[k])
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        iterations += 1

    if not converged:
        converged = bool(done())
    return NelderMeadResult(
        point=sim[0].copy(),
        value=float(fsim[0]),
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
    )


def _patterns(summaries):
    rows = np.array([(s.x, s.t_x, s.T) for s in summaries], dtype=np.float64)
    unique, counts = np.unique(rows, axis=0, return_counts=True)
    return unique[:, 0], unique[:, 1], unique[:, 2], counts.astype(np.float64)


def _neg_log_likelihood(log_params, x, t_x, T, weights):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r, alpha, a, b = np.exp(log_params)
    if not all(math.isfinite(v) and v > 0 for v in (r, alpha, a, b)):
        return math.inf
    try:
        with np.errstate(all="ignore"):
            ll = _log_likelihood(r, alpha, a, b, x, t_x, T)
    except DomainError:
        return math.inf
    total = math.fsum((weights * ll).tolist())
    return -total if math.isfinite(total) else math.inf


def fit(summaries, config=None):
    """Fit the BG/NBD parameters to customer summaries by maximum likelihood.

    Needs at least ten customers, one of whom made a repeat purchase (with no
    repeat purchases at all the dropout shapes ``a`` and ``b`` are not
    identifiable).  Hitting the iteration cap is reported through
    ``FitReport.converged``, not raised.
    """
    config = config or FitConfig()
    summaries = list(summaries)
    if len(summaries) < MIN_CUSTOMERS:
        raise UsageError(f"fit needs at least {MIN_CUSTOMERS} customers, got {len(summaries)}")
    if not any(s.x > 0 for s in summaries):
        raise IdentifiabilityError("no customer has a repeat purchase; a and b are not identifiable")

    x, t_x, T, weights = _patterns(summaries)
    start = np.log(np.array(config.initial_params.as_tuple()))
    result = nelder_mead(lambda p: _neg_log_likelihood(p, x, t_x, T, weights), start, config)
    r, alpha, a, b = (float(v) for v in np.exp(result.point))
    return FitReport(
        params=ModelParams(r, alpha, a, b),
        neg_log_likelihood=result.value,
        iterations=result.iterations,
        converged=result.converged,
        objective_evaluations=result.evaluations,
    )
