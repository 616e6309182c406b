"""
Log-gamma, log-beta and a two-term log-sum-exp.

Every function accepts either Python scalars or numpy arrays.  Scalars go
through a plain ``math`` path (the model evaluates one customer at a time in
many places and numpy's per-call overhead dominates there); arrays go through
a vectorised path with the same coefficients and the same operation order.
"""
import math

import numpy as np

from .errors import DomainError

__all__ = ["log_gamma", "log_beta", "log_sum_exp2", "LogDomainPair"]

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _is_scalar(*values):
    return all(np.ndim(v) == 0 for v in values)


def _lgamma_scalar(z):
    if z == 1.0 or z == 2.0:
        return 0.0
    if z < 0.5:
        # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        return _LOG_PI - math.log(math.sin(math.pi * z)) - _lgamma_scalar(1.0 - z)
    z -= 1.0
    series = _LANCZOS_COEF[0]
    for k in range(1, 9):
        series += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(series)


def _lgamma_array(z):
    reflect = z < 0.5
    u = np.where(reflect, 1.0 - z, z)
    w = u - 1.0
    series = np.full_like(w, _LANCZOS_COEF[0])
    for k in range(1, 9):
        series += _LANCZOS_COEF[k] / (w + k)
    t = w + _LANCZOS_G + 0.5
    out = _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(series)
    out = np.where((u == 1.0) | (u == 2.0), 0.0, out)
    if reflect.any():
        sine = np.sin(np.pi * np.where(reflect, z, 0.5))
        out = np.where(reflect, _LOG_PI - np.log(sine) - out, out)
    return out


# Stirling correction lnG(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], z >= _STIRLING_MIN.
_STIRLING_MIN = 10.0
_STIRLING_COEF = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)


def _stirling_correction(z):
    inv2 = 1.0 / (z * z)
    acc = _STIRLING_COEF[-1]
    for c in _STIRLING_COEF[-2::-1]:
        acc = acc * inv2 + c
    return acc / z


def _lgamma_ratio(small, large):
    """lnG(large) - lnG(large + small) for large >= _STIRLING_MIN.

    Written so the O(large) parts cancel analytically; the direct difference
    loses about log10(large) digits.
    """
    total = large + small
    if np.ndim(total) == 0:
        log1p, log = math.log1p, math.log
    else:
        log1p, log = np.log1p, np.log
    return (
        -(large - 0.5) * log1p(small / large)
        - small * log(total)
        + small
        + (_stirling_correction(large) - _stirling_correction(total))
    )


def log_gamma(z):
    """Natural log of the gamma function for ``z > 0``.

    Raises DomainError for non-positive or non-finite arguments.

    >>> log_gamma(1.0)
    0.0
    >>> round(log_gamma(0.5), 12)
    0.572364942925
    """
    if _is_scalar(z):
        z = float(z)
        if not (math.isfinite(z) and z > 0.0):
            raise DomainError(f"log_gamma requires a finite z > 0, got {z!r}")
        return _lgamma_scalar(z)
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z) & (z > 0.0)):
        raise DomainError("log_gamma requires finite z > 0 everywhere")
    return _lgamma_array(z)


def log_beta(a, b):
    """ln B(a, b) for a, b > 0, symmetric in (a, b).

    When the larger argument is at least 10 the difference
    lnG(large) - lnG(large + small) is taken from a Stirling expansion
    instead of subtracting two nearly equal log-gammas.
    """
    if _is_scalar(a, b):
        a, b = float(a), float(b)
        if not (math.isfinite(a) and math.isfinite(b) and a > 0.0 and b > 0.0):
            raise DomainError(f"log_beta requires finite a, b > 0, got ({a!r}, {b!r})")
        small, large = (a, b) if a <= b else (b, a)
        if large >= _STIRLING_MIN:
            return _lgamma_scalar(small) + _lgamma_ratio(small, large)
        return _lgamma_scalar(a) + _lgamma_scalar(b) - _lgamma_scalar(a + b)
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    if not np.all(np.isfinite(a) & np.isfinite(b) & (a > 0.0) & (b > 0.0)):
        raise DomainError("log_beta requires finite a, b > 0 everywhere")
    small = np.minimum(a, b)
    large = np.maximum(a, b)
    asymptotic = large >= _STIRLING_MIN
    direct = _lgamma_array(a) + _lgamma_array(b) - _lgamma_array(a + b)
    if not asymptotic.any():
        return direct
    safe_large = np.where(asymptotic, large, _STIRLING_MIN)
    split = _lgamma_array(small) + _lgamma_ratio(small, safe_large)
    return np.where(asymptotic, split, direct)


def _check_lse_arg(k):
    if math.isnan(k) or k == math.inf:
        raise DomainError(f"log_sum_exp2 arguments must be finite or -inf, got {k!r}")


def log_sum_exp2(k1, k2):
    """ln(e**k1 + e**k2) evaluated as K + ln(e**(k1-K) + e**(k2-K)), K = max.

    ``-inf`` is absorbing: ``log_sum_exp2(k, -inf) == k`` exactly, and two
    ``-inf`` arguments give ``-inf``.  NaN or ``+inf`` raise DomainError.
    """
    if _is_scalar(k1, k2):
        k1, k2 = float(k1), float(k2)
        _check_lse_arg(k1)
        _check_lse_arg(k2)
        hi, lo = (k1, k2) if k1 >= k2 else (k2, k1)
        if lo == -math.inf:
            return hi
        return hi + math.log1p(math.exp(lo - hi))
    k1, k2 = np.broadcast_arrays(np.asarray(k1, dtype=np.float64), np.asarray(k2, dtype=np.float64))
    if np.any(np.isnan(k1) | np.isnan(k2) | (k1 == np.inf) | (k2 == np.inf)):
        raise DomainError("log_sum_exp2 arguments must be finite or -inf")
    hi = np.maximum(k1, k2)
    lo = np.minimum(k1, k2)
    absorbing = lo == -np.inf
    with np.errstate(invalid="ignore"):
        shifted = hi + np.log1p(np.exp(lo - hi))
    return np.where(absorbing, hi, shifted)


class LogDomainPair:
    """A two-term sum of exponentials held as ``exp(shift) * residual_sum``.

    ``shift`` is the larger exponent, so one shifted term is exactly 1 and
    ``1 <= residual_sum <= 2``.
    """

    __slots__ = ("shift", "residual_sum")

    def __init__(self, shift, residual_sum):
        self.shift = shift
        self.residual_sum = residual_sum

    @classmethod
    def from_exponents(cls, k1, k2):
        _check_lse_arg(k1)
        _check_lse_arg(k2)
        shift = max(k1, k2)
        if shift == -math.inf:
            return cls(-math.inf, 0.0)
        return cls(shift, math.exp(k1 - shift) + math.exp(k2 - shift))

    def log(self):
        if self.shift == -math.inf:
            return -math.inf
        return self.shift + math.log(self.residual_sum)

    def __repr__(self):
        return f"LogDomainPair(shift={self.shift!r}, residual_sum={self.residual_sum!r})"
