"""Known-date structural break tests on connectedness series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats


class BreakTestError(ValueError):
    pass


@dataclass(frozen=True)
class BreakTestResult:
    statistic: float
    pvalue: float
    break_date: object
    test: str


def _rss(x: np.ndarray) -> float:
    return float(np.sum((x - x.mean()) ** 2))


def chow_statistic(pre, post, k: int = 1) -> tuple[float, float]:
    """Mean-shift Chow F and its F(k, T - 2k) p-value."""
    a = np.asarray(pre, dtype=float)
    b = np.asarray(post, dtype=float)
    if len(a) < 10 or len(b) < 10:
        raise BreakTestError(f"need at least 10 observations per side, got {len(a)} and {len(b)}")
    T = len(a) + len(b)
    rss1, rss2 = _rss(a), _rss(b)
    rss_pooled = _rss(np.concatenate([a, b]))
    resid = rss1 + rss2
    if resid == 0:
        return (math.inf, 0.0) if rss_pooled > 0 else (0.0, 1.0)
    F = ((rss_pooled - resid) / k) / (resid / (T - 2 * k))
    F = max(F, 0.0)
    return float(F), float(stats.f.sf(F, k, T - 2 * k))


def _split_series(series: pd.Series, break_date):
    when = pd.Timestamp(break_date)
    idx = pd.to_datetime(series.index)
    values = series.to_numpy(dtype=float)
    keep = np.isfinite(values)
    pre = values[(idx < when) & keep]
    post = values[(idx >= when) & keep]
    return pre, post


def chow_test(series: pd.Series, break_date) -> BreakTestResult:
    """Chow test for a shift in the mean of a dated series at ``break_date``."""
    pre, post = _split_series(series, break_date)
    F, p = chow_statistic(pre, post)
    return BreakTestResult(F, p, pd.Timestamp(break_date).date(), "chow")


def wilcoxon_rank_sum(pre, post, break_date=None) -> BreakTestResult:
    """Rank-sum W of ``pre`` with a tie-corrected normal approximation (two-sided)."""
    a = np.asarray(pre, dtype=float)
    b = np.asarray(post, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 < 10 or n2 < 10:
        raise BreakTestError(f"need at least 10 observations per side, got {n1} and {n2}")
    pooled = np.concatenate([a, b])
    ranks = stats.rankdata(pooled)
    W = float(ranks[:n1].sum())
    N = n1 + n2
    mean = n1 * (N + 1) / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((N + 1) - tie / (N * (N - 1)))
    if var <= 0:
        p = 1.0
    else:
        z = (W - mean) / math.sqrt(var)
        p = float(min(1.0, 2.0 * stats.norm.sf(abs(z))))
    when = None if break_date is None else pd.Timestamp(break_date).date()
    return BreakTestResult(W, p, when, "wilcoxon")


def wilcoxon_test(series: pd.Series, break_date) -> BreakTestResult:
    pre, post = _split_series(series, break_date)
    return wilcoxon_rank_sum(pre, post, break_date)


def break_table(measures: pd.DataFrame, break_date, measure: str = "TCI",
                series: str = "ALL") -> pd.DataFrame:
    """Chow and Wilcoxon results per (tau, band) from a long-format measure table."""
    sel = measures[(measures["measure"] == measure) & (measures["series"] == series)]
    if sel.empty:
        raise BreakTestError(f"no rows for measure {measure!r} and series {series!r}")
    rows = []
    for (tau, band), grp in sel.groupby(["tau", "band"], sort=True):
        s = pd.Series(grp["value"].to_numpy(float), index=pd.to_datetime(grp["date"])).sort_index()
        pre, post = _split_series(s, break_date)
        chow = chow_test(s, break_date)
        wil = wilcoxon_test(s, break_date)
        rows.append({
            "tau": tau, "band": band, "measure": measure, "series": series,
            "break_date": pd.Timestamp(break_date).date().isoformat(),
            "n_pre": len(pre), "n_post": len(post),
            "mean_pre": float(np.mean(pre)), "mean_post": float(np.mean(post)),
            "chow_F": chow.statistic, "chow_pvalue": chow.pvalue,
            "wilcoxon_W": wil.statistic, "wilcoxon_pvalue": wil.pvalue,
        })
    return pd.DataFrame(rows)
