"""Paired t-test, Pearson correlation, and the Student-t distribution
machinery behind their p-values.

The t CDF is computed in-package from the regularized incomplete beta
function (Lentz continued fraction), so no external statistics dependency
is needed. Target accuracy is better than 1e-8 over the df/t ranges the
toolkit uses.
"""

import math
from typing import Mapping, Sequence

from .errors import (
    DegenerateVarianceError,
    InsufficientDataError,
    UndefinedCorrelationError,
)

_CF_EPS = 1e-14
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only on one side of the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= |t|) for T Student-t distributed with df degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def student_t_cdf(t: float, df: int) -> float:
    """Cumulative distribution of the Student-t distribution."""
    tail = 0.5 * student_t_two_sided_p(t, df)
    return 1.0 - tail if t >= 0 else tail


def _paired_values(a, b) -> list[tuple[float, float]]:
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        shared = sorted(set(a) & set(b))
        return [(float(a[k]), float(b[k])) for k in shared]
    if isinstance(a, Sequence) and isinstance(b, Sequence):
        if len(a) != len(b):
            raise InsufficientDataError(
                f"paired samples must have equal length, got {len(a)} and {len(b)}"
            )
        return [(float(x), float(y)) for x, y in zip(a, b)]
    raise TypeError("a and b must both be mappings or both be sequences")


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-sided paired t-test.

    `a` and `b` are either mappings paired by shared key or equal-length
    sequences paired by position. Returns (t, p) with df = n - 1. All-equal
    pairs give (0.0, 1.0); a constant non-zero difference has no defined
    statistic and raises DegenerateVarianceError.
    """
    pairs = _paired_values(a, b)
    n = len(pairs)
    if n < 2:
        raise InsufficientDataError(f"paired t-test needs >= 2 pairs, got {n}")
    diffs = [x - y for x, y in pairs]
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        raise DegenerateVarianceError(
            "all differences identical and non-zero; t statistic undefined"
        )
    t = mean / math.sqrt(var / n)
    return t, student_t_two_sided_p(t, n - 1)


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation with a two-sided p-value.

    p comes from t = r * sqrt((n-2) / (1-r^2)) against the t distribution
    with n-2 degrees of freedom; |r| = 1 maps to p = 0.
    """
    n = len(x)
    if len(y) != n:
        raise InsufficientDataError(f"vectors must have equal length, got {n} and {len(y)}")
    if n < 3:
        raise InsufficientDataError(f"pearson needs length >= 3, got {n}")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [v - mean_x for v in x]
    dy = [v - mean_y for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, student_t_two_sided_p(t, n - 2)
