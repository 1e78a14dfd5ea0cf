"""Pearson/Spearman correlation, Shapiro-Wilk and Mann-Whitney U."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, stdtr

from .errors import ParameterError, ZeroVarianceError


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: int
    m: int | None = None
    method: str = ""

    __test__ = False  # not a pytest class


def _as_sample(x, name="sample") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def rankdata(x) -> np.ndarray:
    """Ranks starting at 1, ties given their average rank."""
    x = np.asarray(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    boundaries = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1], True])
    ranks = np.empty(len(x), dtype=np.float64)
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[lo:hi]] = 0.5 * (lo + 1 + hi)
    return ranks


# -- correlation ----------------------------------------------------------------

def pearson(xs, ys) -> float:
    x = _as_sample(xs, "xs")
    y = _as_sample(ys, "ys")
    if len(x) != len(y):
        raise ParameterError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ParameterError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("correlation undefined: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_test(xs, ys) -> TestResult:
    """Pearson r with the two-sided p-value of the t test (n-2 degrees of freedom)."""
    r = pearson(xs, ys)
    n = len(np.asarray(xs))
    if n < 3 or abs(r) == 1.0:
        p = 0.0 if abs(r) == 1.0 and n >= 3 else 1.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * stdtr(n - 2, -abs(t)))
    return TestResult(r, min(1.0, p), n, method="t")


def spearman(xs, ys) -> float:
    return pearson(rankdata(_as_sample(xs, "xs")), rankdata(_as_sample(ys, "ys")))


# -- Shapiro-Wilk (Royston's AS R94 approximation) -----------------------------

_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(coef, x: float) -> float:
    out = 0.0
    for c in reversed(coef):
        out = out * x + c
    return out


def shapiro_coefficients(n: int) -> np.ndarray:
    """Weights for the ordered sample; antisymmetric, unit norm."""
    if n == 3:
        half = np.array([math.sqrt(0.5)])
    else:
        i = np.arange(1, n // 2 + 1)
        m = -ndtri((i - 0.375) / (n + 0.25))  # positive, largest first
        summ2 = 2.0 * float(m @ m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = m[0] / ssumm2 + _poly(_C1, rsn)
        half = np.empty(n // 2)
        half[0] = a1
        if n > 5:
            a2 = m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
            half[1] = a2
            half[2:] = m[2:] / fac
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
            half[1:] = m[1:] / fac
    a = np.zeros(n)
    a[: len(half)] = -half
    a[n - len(half):] = half[::-1]
    return a


def shapiro_wilk(sample) -> TestResult:
    x = np.sort(_as_sample(sample))
    n = len(x)
    if not 3 <= n <= 5000:
        raise ParameterError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    x = x - np.median(x)
    ss = float(np.sum((x - x.mean()) ** 2))
    if x[-1] - x[0] == 0.0 or ss == 0.0:
        raise ZeroVarianceError("Shapiro-Wilk undefined for a constant sample")
    a = shapiro_coefficients(n)
    w = min(1.0, float(a @ x) ** 2 / ss)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        return TestResult(w, min(1.0, max(0.0, p)), n, method="exact n=3")
    w1 = math.log1p(-w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if w1 >= gamma:
            return TestResult(w, 1e-99, n, method="royston")
        w1 = -math.log(gamma - w1)
        mean = _poly(_C3, n)
        sd = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mean = _poly(_C5, ln)
        sd = math.exp(_poly(_C6, ln))
    p = float(ndtr(-(w1 - mean) / sd))
    return TestResult(w, p, n, method="royston")


def lognormal_check(basin_sizes, alpha: float = 0.01) -> bool:
    """True when log sizes pass Shapiro-Wilk at level ``alpha``."""
    sizes = _as_sample(basin_sizes, "basin_sizes")
    if np.any(sizes <= 0):
        raise ParameterError("basin sizes must be positive")
    return shapiro_wilk(np.log(sizes)).p_value > alpha


# -- Mann-Whitney U -------------------------------------------------------------

EXACT_LIMIT = 400


def _exact_rank_sum_counts(doubled_ranks: np.ndarray, n: int) -> np.ndarray:
    """Number of n-subsets of the pooled sample per doubled rank sum."""
    total = int(doubled_ranks.sum())
    dp = np.zeros((n + 1, total + 1), dtype=np.int64)
    dp[0, 0] = 1
    for r in doubled_ranks.astype(np.int64):
        dp[1:, r:] += dp[:-1, : total + 1 - r].copy()
    return dp[n]


def mann_whitney(a, b, alternative: str = "two-sided") -> TestResult:
    """U statistic of ``a`` (pairs with a > b, ties count one half).

    Exact permutation p-value (conditional on ties) when ``len(a)*len(b) <=
    400``, otherwise the tie-corrected normal approximation with continuity
    correction. ``alternative="greater"`` tests whether ``a`` tends to
    exceed ``b``.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ParameterError(f"unknown alternative {alternative!r}")
    x = _as_sample(a, "a")
    y = _as_sample(b, "b")
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise ParameterError("both samples must be nonempty")
    ranks = rankdata(np.concatenate([x, y]))
    u = float(ranks[:n].sum()) - n * (n + 1) / 2.0
    mu = n * m / 2.0

    if n * m <= EXACT_LIMIT:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        counts = _exact_rank_sum_counts(doubled, n).astype(np.float64)
        total = counts.sum()
        d_obs = int(doubled[:n].sum())
        p_le = counts[: d_obs + 1].sum() / total
        p_ge = counts[d_obs:].sum() / total
        method = "exact"
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        big_n = n + m
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (big_n * (big_n - 1))
        var = n * m / 12.0 * ((big_n + 1) - tie_term)
        if var <= 0.0:
            p_le = p_ge = 1.0
        else:
            sd = math.sqrt(var)
            p_ge = float(ndtr(-(u - mu - 0.5) / sd))
            p_le = float(ndtr((u - mu + 0.5) / sd))
        method = "normal"
    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    else:
        p = 2.0 * min(p_ge, p_le)
    return TestResult(u, float(min(1.0, max(0.0, p))), n, m, method)
