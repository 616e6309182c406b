"""
Command-line interface: ``bgnbd-churn {ingest,fit,score,simulate,check}``.

Exit codes: 0 success, 2 usage or parse error, 3 identifiability error,
4 numerical-consistency failure.
"""
import argparse
import csv
import json
import math
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DateRangeError, DomainError, IdentifiabilityError, NumericRangeError, ParseError, UsageError
from .fit import FitConfig, fit
from .ingest import parse_date, read_summaries, read_transactions, summarize_all, write_summaries
from .model import (
    ChurnQuery,
    CustomerSummary,
    ModelParams,
    churn_probability,
    churn_probability_reference,
    churn_probability_window,
)
from .simulate import (
    DEFAULT_START_DATE,
    SimulationConfig,
    simulate_cohort,
    write_ground_truth,
    write_transactions,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IDENTIFIABILITY = 3
EXIT_NUMERIC = 4

SCORE_HEADER = ["customer_id", "effective_horizon", "churn_probability", "already_churned"]
CHECK_X_VALUES = (0, 1, 5, 20, 50, 100, 500, 10000)
CHECK_THRESHOLD = 1e-10
_PARAM_FIELDS = ("r", "alpha", "a", "b")
_PROBABILITY_QUANTUM = Decimal("1e-10")


class CommandError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def format_probability(p):
    """Ten decimal places, ties rounded to even on the exact binary value."""
    return format(Decimal(float(p)).quantize(_PROBABILITY_QUANTUM, rounding=ROUND_HALF_EVEN), "f")


def format_days(value):
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


# --- params file ------------------------------------------------------------


def write_params(path, params, fitted_on=None):
    payload = {
        "r": params.r,
        "alpha": params.alpha,
        "a": params.a,
        "b": params.b,
        "fitted_on": fitted_on,
        "tool_version": __version__,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_params(path):
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CommandError(f"cannot read params file {path}: {exc}") from None
    if not isinstance(payload, dict):
        raise CommandError(f"params file {path} is not a JSON object")
    missing = [k for k in _PARAM_FIELDS if k not in payload]
    if missing:
        raise CommandError(f"params file {path} is missing: {', '.join(missing)}")
    try:
        return ModelParams(*(float(payload[k]) for k in _PARAM_FIELDS))
    except (TypeError, ValueError) as exc:
        raise CommandError(f"invalid parameters in {path}: {exc}") from None


def _parse_init(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise CommandError("--init expects r,alpha,a,b")
    try:
        return ModelParams(*(float(p) for p in parts))
    except ValueError as exc:
        raise CommandError(f"--init: {exc}") from None


# --- commands ----------------------------------------------------------------


def cmd_ingest(args):
    try:
        as_of = parse_date(args.as_of)
    except ValueError as exc:
        raise CommandError(f"--as-of: {exc}") from None
    try:
        records = read_transactions(args.transactions)
        rows = summarize_all(records, as_of)
    except ParseError as exc:
        raise CommandError(f"{args.transactions}: {exc}") from None
    except DateRangeError as exc:
        raise CommandError(str(exc)) from None
    write_summaries(args.output, rows)
    return EXIT_OK


def _load_summaries(path):
    try:
        return read_summaries(path)
    except ParseError as exc:
        raise CommandError(f"{path}: {exc}") from None
    except OSError as exc:
        raise CommandError(str(exc)) from None


def cmd_fit(args):
    rows = _load_summaries(args.input)
    initial = _parse_init(args.init) if args.init else FitConfig().initial_params
    try:
        config = FitConfig(
            initial_params=initial,
            max_iterations=args.max_iter,
            objective_tolerance=args.tol,
        )
        report = fit([s for _, s in rows], config)
    except IdentifiabilityError as exc:
        raise CommandError(str(exc), EXIT_IDENTIFIABILITY) from None
    except UsageError as exc:
        raise CommandError(str(exc)) from None
    write_params(args.output, report.params, fitted_on=Path(args.input).name)
    print(f"neg_log_likelihood={report.neg_log_likelihood!r}")
    print(f"iterations={report.iterations}")
    print(f"converged={str(report.converged).lower()}")
    if not report.converged:
        print(f"warning: optimizer stopped after {report.iterations} iterations without converging", file=sys.stderr)
    return EXIT_OK


def cmd_score(args):
    params = read_params(args.params)
    try:
        query = ChurnQuery(args.window)
    except DomainError as exc:
        raise CommandError(f"--window: {exc}") from None
    rows = _load_summaries(args.input)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_HEADER)
        for cid, summary in rows:
            score = churn_probability_window(params, summary, query)
            writer.writerow([
                cid,
                format_days(score.effective_horizon),
                format_probability(score.probability),
                int(score.already_churned),
            ])
    return EXIT_OK


def cmd_simulate(args):
    try:
        params = ModelParams(args.r, args.alpha, args.a, args.b)
        config = SimulationConfig(
            params=params,
            num_customers=args.customers,
            horizon=args.horizon,
            holdout=args.holdout,
            seed=args.seed,
        )
    except (DomainError, UsageError) as exc:
        raise CommandError(str(exc)) from None
    cohort = simulate_cohort(config)
    prefix = args.output
    write_transactions(f"{prefix}_transactions.csv", cohort.transactions(DEFAULT_START_DATE))
    write_ground_truth(f"{prefix}_truth.csv", cohort)
    print(f"as_of={cohort.as_of(DEFAULT_START_DATE).isoformat()}")
    return EXIT_OK


def _random_summary(rng, x):
    T = float(rng.uniform(1.0, 3650.0))
    t_x = 0.0 if x == 0 else float(rng.uniform(0.0, T))
    return CustomerSummary(x, t_x, T)


def run_check(params, grid_size, seed):
    """Compare the stable and reference evaluators on random summaries.

    Returns ``(rows, worst)`` where each row summarises one ``x`` value and
    ``worst`` is ``(discrepancy, x, t_x, T, t)`` of the largest disagreement
    (or None when the reference never succeeded).
    """
    rng = np.random.default_rng(seed)
    rows = []
    worst = None
    for x in CHECK_X_VALUES:
        max_diff = 0.0
        ref_ok = ref_range = non_finite = 0
        for _ in range(grid_size):
            summary = _random_summary(rng, x)
            t = float(rng.uniform(0.0, 60.0))
            stable = churn_probability(params, summary, t)
            if not (math.isfinite(stable) and 0.0 <= stable <= 1.0):
                non_finite += 1
                continue
            try:
                reference = churn_probability_reference(params, summary, t)
            except NumericRangeError:
                ref_range += 1
                continue
            ref_ok += 1
            diff = abs(stable - reference)
            max_diff = max(max_diff, diff)
            if worst is None or diff > worst[0]:
                worst = (diff, x, summary.t_x, summary.T, t)
        rows.append((x, grid_size, ref_ok, ref_range, max_diff, non_finite))
    return rows, worst


def cmd_check(args):
    if args.grid_size < 1:
        raise CommandError("--grid-size must be at least 1")
    params = read_params(args.params)
    rows, worst = run_check(params, args.grid_size, args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["x", "cases", "reference_ok", "reference_range_errors", "max_abs_diff", "stable_nonfinite"])
    for x, cases, ok, range_errors, max_diff, non_finite in rows:
        writer.writerow([x, cases, ok, range_errors, f"{max_diff:.3e}", non_finite])
    overall = max(r[4] for r in rows)
    bad_stable = sum(r[5] for r in rows)
    if overall > CHECK_THRESHOLD or bad_stable:
        if worst is not None and worst[0] > CHECK_THRESHOLD:
            diff, x, t_x, T, t = worst
            print(f"FAIL: |stable - reference| = {diff:.3e} at x={x} t_x={t_x!r} T={T!r} t={t!r}", file=sys.stderr)
        if bad_stable:
            print(f"FAIL: {bad_stable} stable evaluations outside [0, 1]", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"ok: max_abs_diff={overall:.3e} threshold={CHECK_THRESHOLD:.0e}")
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bgnbd-churn",
        description="BG/NBD churn scoring under a 'no purchase within M days' definition.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="transaction log -> customer summaries")
    p.add_argument("--transactions", required=True)
    p.add_argument("--as-of", required=True, help="scoring date, YYYY-MM-DD")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="maximum-likelihood fit of r, alpha, a, b")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--init", help="starting point r,alpha,a,b (default 1,1,1,1)")
    p.add_argument("--max-iter", type=int, default=FitConfig.max_iterations)
    p.add_argument("--tol", type=float, default=FitConfig.objective_tolerance,
                   help="objective tolerance of the simplex search")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="churn probabilities for a window of M days")
    p.add_argument("--params", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--window", required=True, type=float, help="M, days")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="synthetic BG/NBD transaction log")
    for name in ("r", "alpha", "a", "b"):
        p.add_argument(f"--{name}", required=True, type=float)
    p.add_argument("--customers", required=True, type=int)
    p.add_argument("--horizon", required=True, type=float)
    p.add_argument("--holdout", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="prefix for <prefix>_transactions.csv and <prefix>_truth.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="stable vs reference evaluator sweep")
    p.add_argument("--params", required=True)
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
