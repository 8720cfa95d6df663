"""Summary statistics, normality/unit-root diagnostics and rank correlations."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.tsa.stattools import adfuller

from .panel import ReturnPanel


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesSummary:
    mean: float
    std_dev: float
    skewness: float
    excess_kurtosis: float
    jb_stat: float
    jb_pvalue: float
    adf_stat: float
    adf_pvalue: float

    def as_dict(self) -> dict:
        return asdict(self)


def moments(series) -> tuple[float, float, float, float]:
    """Mean, std (ddof=1), skewness m3/m2^1.5 and excess kurtosis m4/m2^2 - 3."""
    x = np.asarray(series, dtype=float)
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d**2))
    if m2 == 0.0:
        raise StatsError("zero variance: skewness and kurtosis are undefined")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return mean, float(np.std(x, ddof=1)), m3 / m2**1.5, m4 / m2**2 - 3.0


def jarque_bera(series) -> tuple[float, float]:
    x = np.asarray(series, dtype=float)
    _, _, skew, exkurt = moments(x)
    jb = len(x) / 6.0 * (skew**2 + exkurt**2 / 4.0)
    return jb, float(stats.chi2.sf(jb, 2))


def adf_test(series, max_lag: int | str = "auto") -> tuple[float, float]:
    """ADF with constant only.

    ``max_lag="auto"`` searches 0..floor(12 (T/100)^0.25) by AIC; an integer
    fixes the lag.  A deterministic trend such as 1..T gives a finite
    statistic with p-value ~1; a constant series returns (nan, nan).
    """
    x = np.asarray(series, dtype=float)
    T = len(x)
    if max_lag == "auto":
        cap = int(math.floor(12.0 * (T / 100.0) ** 0.25))
        lag_arg, autolag = cap, "AIC"
    else:
        cap = int(max_lag)
        lag_arg, autolag = cap, None
    if T <= cap + 10:
        raise StatsError(f"series too short for ADF with max lag {cap} (T={T})")
    if np.ptp(x) == 0:
        return math.nan, math.nan
    with warnings.catch_warnings():
        # perfectly fitted lag regressions (e.g. a linear trend) give log(0) likelihoods
        warnings.simplefilter("ignore", RuntimeWarning)
        result = adfuller(x, maxlag=lag_arg, regression="c", autolag=autolag)
    return float(result[0]), float(result[1])


def summarize(series) -> SeriesSummary:
    x = np.asarray(series, dtype=float)
    if len(x) < 8:
        raise StatsError(f"need at least 8 observations, got {len(x)}")
    mean, sd, skew, exkurt = moments(x)
    jb, jb_p = jarque_bera(x)
    try:
        adf, adf_p = adf_test(x)
    except StatsError:
        adf, adf_p = math.nan, math.nan
    return SeriesSummary(mean, sd, skew, exkurt, jb, jb_p, adf, adf_p)


def kendall_tau(x, y) -> tuple[float, float]:
    """Tau-b with tie correction; two-sided p-value by normal approximation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise StatsError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 10:
        raise StatsError("need at least 10 paired observations")
    res = stats.kendalltau(x, y, variant="b", method="asymptotic")
    tau = float(np.clip(res.statistic, -1.0, 1.0))
    p = float(res.pvalue) if np.isfinite(res.pvalue) else 1.0
    return tau, p


def correlation_matrix(panel: ReturnPanel, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kendall tau matrix, p-value matrix and significance mask (p < alpha)."""
    n = panel.n
    if n < 2:
        raise StatsError("need at least two series")
    tau = np.eye(n)
    pval = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            t, p = kendall_tau(panel.values[:, i], panel.values[:, j])
            tau[i, j] = tau[j, i] = t
            pval[i, j] = pval[j, i] = p
    mask = pval < alpha
    np.fill_diagonal(mask, True)
    return tau, pval, mask


def summary_table(panel: ReturnPanel) -> pd.DataFrame:
    """One row per series: moments, normality and unit-root diagnostics."""
    rows = []
    for j, label in enumerate(panel.labels):
        s = summarize(panel.values[:, j])
        rows.append({"series": label, **s.as_dict()})
    return pd.DataFrame(rows)


def correlation_frame(panel: ReturnPanel, alpha: float = 0.05) -> pd.DataFrame:
    """Long-format tau matrix with p-values and the significance flag."""
    tau, pval, mask = correlation_matrix(panel, alpha)
    rows = []
    for i, a in enumerate(panel.labels):
        for j, b in enumerate(panel.labels):
            rows.append({"row": a, "col": b, "tau": tau[i, j], "pvalue": pval[i, j],
                         "significant": bool(mask[i, j])})
    return pd.DataFrame(rows)
