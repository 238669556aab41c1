"""Discrimination and calibration metrics, and a paired t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class UndefinedMetricError(ValueError):
    """The metric has no value for this input (e.g. AUC with one class)."""


def auc(scores, labels) -> float:
    """ROC AUC as the Mann-Whitney statistic, ties counted one half.

    One sort, midranks for tied scores.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores vs {y.size} labels")
    pos = y == 1
    n1 = int(pos.sum())
    n0 = int((y == 0).sum())
    if n1 + n0 != y.size:
        raise ValueError("labels must be 0 or 1")
    if n1 == 0 or n0 == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # midranks: tie groups share the mean of their 1-based positions
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    mid = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def brier(probs, labels) -> float:
    p = np.asarray(probs, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(np.mean((p - y) ** 2))


def reliability_table(probs, labels, n_bins: int = 10) -> list[dict]:
    """Equal-width bins on [0, 1]; the last bin is closed. Empty bins are omitted."""
    p = np.asarray(probs, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    b = np.minimum((p * n_bins).astype(np.int64), n_bins - 1)
    rows = []
    for k in range(n_bins):
        m = b == k
        cnt = int(m.sum())
        if cnt:
            rows.append(
                {
                    "bin": k,
                    "lower": k / n_bins,
                    "upper": (k + 1) / n_bins,
                    "count": cnt,
                    "confidence": float(p[m].mean()),
                    "accuracy": float(y[m].mean()),
                }
            )
    return rows


def ece(probs, labels, n_bins: int = 10) -> float:
    """Expected calibration error: count-weighted |observed rate - mean prob| per bin."""
    n = np.asarray(probs).size
    if n == 0:
        return 0.0
    return float(sum(r["count"] / n * abs(r["accuracy"] - r["confidence"]) for r in reliability_table(probs, labels, n_bins)))


# ---------------------------------------------------------------------------
# t distribution via the regularized incomplete beta function


def _betacf(a: float, b: float, x: float, max_iter: int = 500, tol: float = 1e-15) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, betainc(df / 2.0, 0.5, x))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


@dataclass
class TTestResult:
    t: float
    p: float
    df: int
    mean_diff: float
    degenerate: bool = False


def paired_ttest(a, b) -> TTestResult:
    """Two-sided paired t-test. Zero-variance differences give p = 1, flagged degenerate."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    n = d.size
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return TTestResult(0.0 if mean == 0 else math.copysign(math.inf, mean), 1.0, n - 1, mean, True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, t_sf_two_sided(t, n - 1), n - 1, mean)
