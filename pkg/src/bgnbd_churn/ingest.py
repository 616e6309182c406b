"""
Transaction logs to per-customer (x, t_x, T) summaries.

Purchases are aggregated to calendar days.  A customer's first purchase day
is their time origin, ``x`` counts the distinct purchase days after it, and
``t_x``/``T`` are whole days from the origin to the last purchase and to the
scoring date.
"""
import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass
from datetime import date

from .errors import DateRangeError, ParseError, UsageError
from .model import CustomerSummary

__all__ = [
    "TransactionRecord",
    "CustomerHistory",
    "aggregate_daily",
    "summarize",
    "summarize_all",
    "parse_date",
    "read_transactions",
    "read_summaries",
    "write_summaries",
    "TRANSACTION_HEADER",
    "SUMMARY_HEADER",
]

TRANSACTION_HEADER = ["customer_id", "purchase_date"]
SUMMARY_HEADER = ["customer_id", "x", "t_x", "T"]

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")


def parse_date(text):
    """Parse a ``YYYY-MM-DD`` date; anything else raises ValueError."""
    text = text.strip()
    if not _DATE_RE.fullmatch(text):
        raise ValueError(f"expected YYYY-MM-DD, got {text!r}")
    return date.fromisoformat(text)


@dataclass(frozen=True)
class TransactionRecord:
    customer_id: str
    purchase_date: date

    def __post_init__(self):
        cid = str(self.customer_id).strip()
        if not cid:
            raise UsageError("customer_id must be non-empty")
        object.__setattr__(self, "customer_id", cid)


@dataclass(frozen=True)
class CustomerHistory:
    customer_id: str
    purchase_days: tuple


def aggregate_daily(records):
    """Group records by customer and collapse same-day purchases.

    Days are sorted ascending within each history and histories are ordered by
    customer id.
    """
    days = defaultdict(set)
    for rec in records:
        days[rec.customer_id].add(rec.purchase_date)
    return [CustomerHistory(cid, tuple(sorted(days[cid]))) for cid in sorted(days)]


def summarize(history, as_of):
    if not history.purchase_days:
        raise UsageError(f"customer {history.customer_id!r} has no purchases")
    first, last = history.purchase_days[0], history.purchase_days[-1]
    if as_of < last:
        raise DateRangeError(
            f"customer {history.customer_id!r}: as-of date {as_of} precedes last purchase {last}"
        )
    return CustomerSummary(
        x=len(history.purchase_days) - 1,
        t_x=(last - first).days,
        T=(as_of - first).days,
    )


def summarize_all(records, as_of):
    """``[(customer_id, CustomerSummary), ...]`` ordered by customer id."""
    return [(h.customer_id, summarize(h, as_of)) for h in aggregate_daily(records)]


def _rows(source):
    """Yield ``(line_number, fields)`` for a path or an open text stream.

    Accepts LF or CRLF line endings and skips blank lines.
    """
    if isinstance(source, io.IOBase):
        text = source.read()
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        if not line.strip():
            continue
        yield lineno, next(csv.reader([line]))


def _check_header(first, expected):
    if first is None:
        return
    lineno, fields = first
    if [f.strip() for f in fields] != expected:
        raise ParseError(f"expected header {','.join(expected)!r}, got {','.join(fields)!r}", lineno)


def read_transactions(source):
    """Read a ``customer_id,purchase_date`` file.

    A completely empty file is accepted and yields no records.
    """
    rows = _rows(source)
    _check_header(next(rows, None), TRANSACTION_HEADER)
    records = []
    for lineno, fields in rows:
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        try:
            day = parse_date(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        try:
            records.append(TransactionRecord(fields[0], day))
        except UsageError as exc:
            raise ParseError(str(exc), lineno) from None
    return records


def _parse_days(text, name, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name} is not a number: {text!r}", lineno) from None
    return int(value) if value.is_integer() else value


def read_summaries(source):
    """Read a ``customer_id,x,t_x,T`` file into ``[(customer_id, CustomerSummary)]``.

    Row order is preserved.
    """
    rows = _rows(source)
    _check_header(next(rows, None), SUMMARY_HEADER)
    out = []
    for lineno, fields in rows:
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        cid = fields[0].strip()
        if not cid:
            raise ParseError("empty customer_id", lineno)
        try:
            x = int(fields[1])
        except ValueError:
            raise ParseError(f"x is not an integer: {fields[1]!r}", lineno) from None
        t_x = _parse_days(fields[2], "t_x", lineno)
        T = _parse_days(fields[3], "T", lineno)
        try:
            out.append((cid, CustomerSummary(x, t_x, T)))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return out


def _days_text(value):
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def write_summaries(target, rows):
    """Write ``[(customer_id, CustomerSummary)]`` as a summary file."""
    def emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for cid, s in rows:
            writer.writerow([cid, s.x, _days_text(s.t_x), _days_text(s.T)])

    if isinstance(target, io.IOBase):
        emit(target)
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
