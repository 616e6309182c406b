"""
Synthetic transaction logs from the BG/NBD generative process.

Each customer draws a purchase rate ``lam ~ Gamma(r, rate=alpha)`` and a
dropout probability ``p ~ Beta(a, b)``.  The first purchase happens at time
0; waiting times between purchases are Exponential(lam); after every repeat
purchase the customer leaves for good with probability ``p``.

Every customer gets an independent random stream seeded from
``(seed, customer index)``, so a cohort is reproducible regardless of how it
is generated.
"""
import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import UsageError
from .ingest import TransactionRecord
from .model import ModelParams

__all__ = [
    "SimulationConfig",
    "SimulatedCohort",
    "DEFAULT_START_DATE",
    "sample_customer",
    "simulate_cohort",
    "customer_rng",
    "write_transactions",
    "write_ground_truth",
]

DEFAULT_START_DATE = date(2020, 1, 1)


@dataclass(frozen=True)
class SimulationConfig:
    params: ModelParams
    num_customers: int
    horizon: float
    holdout: float = 0.0
    seed: int = 0
    disable_dropout: bool = False

    def __post_init__(self):
        if int(self.num_customers) != self.num_customers or self.num_customers < 1:
            raise UsageError(f"num_customers must be a positive integer, got {self.num_customers!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise UsageError(f"horizon must be positive, got {self.horizon!r}")
        if not (math.isfinite(self.holdout) and self.holdout >= 0):
            raise UsageError(f"holdout must be non-negative, got {self.holdout!r}")
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


def customer_rng(seed, index):
    """The independent random stream of customer ``index`` in cohort ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_customer(params, horizon, holdout, rng, disable_dropout=False):
    """Purchase times of one simulated customer, up to ``horizon + holdout``.

    The first element is always 0.0.  Times are strictly increasing.
    """
    end = horizon + holdout
    lam = rng.gamma(shape=params.r, scale=1.0 / params.alpha)
    p = 0.0 if disable_dropout else rng.beta(params.a, params.b)
    times = [0.0]
    if lam <= 0.0:
        return np.array(times)
    now = 0.0
    while True:
        now += rng.exponential(1.0 / lam)
        if now > end:
            break
        times.append(now)
        if p > 0.0 and rng.random() < p:
            break
    return np.array(times)


@dataclass
class SimulatedCohort:
    """A simulated cohort and its ground truth.

    ``purchase_times[i]`` holds every purchase of customer ``i`` up to
    ``horizon + holdout``, exact (not rounded).  The ``exact_*`` arrays are the
    continuous-time summaries at ``horizon``; the ``daily_*`` arrays are what
    ingestion produces from the day-floored transaction log.
    """

    config: SimulationConfig
    customer_ids: list
    purchase_times: list
    exact_x: np.ndarray
    exact_t_x: np.ndarray
    daily_x: np.ndarray
    daily_t_x: np.ndarray
    daily_T: int
    holdout_zero: np.ndarray = field(default=None)

    @property
    def horizon(self):
        return self.config.horizon

    @property
    def exact_T(self):
        return np.full(len(self.customer_ids), float(self.config.horizon))

    def as_of(self, start_date=DEFAULT_START_DATE):
        return start_date + timedelta(days=self.daily_T)

    def zero_purchases_within(self, windows):
        """Whether each customer makes no purchase in (horizon, horizon + window].

        ``windows`` is broadcast against the customers and must not exceed the
        simulated holdout.
        """
        windows = np.broadcast_to(np.asarray(windows, dtype=np.float64), (len(self.customer_ids),))
        if np.any(windows > self.config.holdout):
            raise UsageError("window extends past the simulated holdout")
        horizon = self.config.horizon
        out = np.empty(len(windows), dtype=bool)
        for i, times in enumerate(self.purchase_times):
            future = times[times > horizon]
            out[i] = not (future.size and future[0] <= horizon + windows[i])
        return out

    def transactions(self, start_date=DEFAULT_START_DATE):
        """Observation-period purchases as day-precision transaction records."""
        records = []
        horizon = self.config.horizon
        for cid, times in zip(self.customer_ids, self.purchase_times):
            for day in np.floor(times[times <= horizon]).astype(np.int64):
                records.append(TransactionRecord(cid, start_date + timedelta(days=int(day))))
        return records


def simulate_cohort(config):
    """Simulate ``config.num_customers`` customers observed up to ``config.horizon``."""
    n = config.num_customers
    width = len(str(n - 1))
    ids = [f"c{i:0{width}d}" for i in range(n)]
    horizon = config.horizon
    daily_T = int(math.floor(horizon))

    times_all = []
    exact_x = np.empty(n, dtype=np.int64)
    exact_t_x = np.empty(n)
    daily_x = np.empty(n, dtype=np.int64)
    daily_t_x = np.empty(n, dtype=np.int64)
    holdout_zero = np.empty(n, dtype=bool) if config.holdout > 0 else None

    for i in range(n):
        times = sample_customer(
            config.params, horizon, config.holdout, customer_rng(config.seed, i), config.disable_dropout
        )
        times_all.append(times)
        observed = times[times <= horizon]
        exact_x[i] = observed.size - 1
        exact_t_x[i] = observed[-1]
        days = np.unique(np.floor(observed).astype(np.int64))
        daily_x[i] = days.size - 1
        daily_t_x[i] = days[-1]
        if holdout_zero is not None:
            holdout_zero[i] = observed.size == times.size

    return SimulatedCohort(
        config=config,
        customer_ids=ids,
        purchase_times=times_all,
        exact_x=exact_x,
        exact_t_x=exact_t_x,
        daily_x=daily_x,
        daily_t_x=daily_t_x,
        daily_T=daily_T,
        holdout_zero=holdout_zero,
    )


def write_transactions(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["customer_id", "purchase_date"])
        for rec in records:
            writer.writerow([rec.customer_id, rec.purchase_date.isoformat()])


def write_ground_truth(path, cohort):
    """Write ``customer_id,x,t_x,T,holdout_zero`` using the day-level summaries."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["customer_id", "x", "t_x", "T", "holdout_zero"])
        for i, cid in enumerate(cohort.customer_ids):
            if cohort.holdout_zero is None:
                flag = "NA"
            else:
                flag = "1" if cohort.holdout_zero[i] else "0"
            writer.writerow([cid, int(cohort.daily_x[i]), int(cohort.daily_t_x[i]), cohort.daily_T, flag])
