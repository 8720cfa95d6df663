"""MVP / MCP / MCoP portfolios, hedging effectiveness, Sharpe variants, backtests."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from .connectedness import connectedness
from .panel import ReturnPanel
from .qvar import fit_qvar, vma_coefficients
from .rolling import RollingConfig, RollingResult, window_ends

STRATEGIES = ("mvp", "mcp", "mcop")
SHARPE_DENOMINATORS = ("stddev", "var", "cvar")


class PortfolioError(ValueError):
    pass


@dataclass(frozen=True)
class WeightPath:
    dates: np.ndarray
    labels: tuple
    weights: np.ndarray  # (dates, n)

    def frame(self) -> pd.DataFrame:
        out = pd.DataFrame(self.weights, columns=list(self.labels))
        out.insert(0, "date", pd.to_datetime(self.dates).strftime("%Y-%m-%d"))
        return out


@dataclass
class PerformanceReport:
    mean_return: float
    std_dev: float
    sharpe_std: float
    sharpe_var: float
    sharpe_cvar: float
    he: np.ndarray
    he_pvalue: np.ndarray
    portfolio_returns: pd.Series
    cumulative: pd.Series
    labels: tuple = ()
    weight_summary: pd.DataFrame | None = None
    sub_reports: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def performance_rows(self) -> dict:
        return {
            "Return": self.mean_return,
            "StdDev": self.std_dev,
            "Sharpe Ratio (StdDev)": self.sharpe_std,
            "Sharpe Ratio (VaR)": self.sharpe_var,
            "Sharpe Ratio (CVaR)": self.sharpe_cvar,
        }

    def asset_frame(self) -> pd.DataFrame:
        frame = self.weight_summary.copy() if self.weight_summary is not None else pd.DataFrame(
            {"series": list(self.labels)})
        frame["HE"] = self.he
        frame["p-value"] = self.he_pvalue
        return frame


def _budget_solve(matrix: np.ndarray, free: np.ndarray) -> np.ndarray:
    """argmin w'Mw subject to sum(w) = 1 with w fixed at zero outside ``free``."""
    sub = matrix[np.ix_(free, free)]
    if np.linalg.cond(sub) > 1e12:
        raise PortfolioError("matrix is singular; cannot form minimum-risk weights")
    raw = np.linalg.solve(sub, np.ones(free.sum()))
    total = raw.sum()
    if total <= 0:
        raise PortfolioError("1' M^-1 1 is not positive; matrix is not a valid risk matrix")
    w = np.zeros(matrix.shape[0])
    w[free] = raw / total
    return w


def _long_only(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Primal active-set solve of min w'Mw on the simplex, started from equal weights."""
    n = matrix.shape[0]
    w = np.full(n, 1.0 / n)
    free = np.ones(n, dtype=bool)
    for _ in range(50 * n):
        target = _budget_solve(matrix, free)
        step = target - w
        if np.max(np.abs(step)) <= tol:
            grad = matrix @ w
            lam = grad[free].mean()
            slack = np.where(free, np.inf, grad - lam)
            i = int(np.argmin(slack))
            if slack[i] >= -tol * max(1.0, abs(lam)):
                w[~free] = 0.0
                return w / w.sum()
            free[i] = True  # releasing this bound lowers the objective
            continue
        shrinking = free & (step < 0)
        ratios = np.full(n, np.inf)
        ratios[shrinking] = -w[shrinking] / step[shrinking]
        j = int(np.argmin(ratios))
        alpha = min(1.0, ratios[j])
        w = w + alpha * step
        if alpha < 1.0:
            w[j] = 0.0
            free[j] = False
    raise PortfolioError("long-only weight solver did not terminate")


def _minimum_risk(matrix, name: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PortfolioError(f"{name} must be a square matrix")
    if not np.all(np.isfinite(m)):
        raise PortfolioError(f"{name} has non-finite entries")
    m = (m + m.T) / 2.0
    riskless = np.diag(m) <= 0
    if riskless.any():
        # a zero-variance asset is the minimum-variance portfolio on its own
        w = riskless / riskless.sum()
        return w.astype(float)
    return _long_only(m)


def mvp_weights(cov) -> np.ndarray:
    """Long-only minimum-variance weights from a covariance matrix."""
    return _minimum_risk(cov, "covariance")


def mcp_weights(corr) -> np.ndarray:
    """Minimum-correlation weights: the MVP formula on the correlation matrix."""
    corr = np.asarray(corr, dtype=float)
    if not np.allclose(np.diag(corr), 1.0):
        raise PortfolioError("correlation matrix must have a unit diagonal")
    return _minimum_risk(corr, "correlation")


def pairwise_connectedness_index(theta_tilde) -> np.ndarray:
    """PCI_ij = 2 (t_ij + t_ji) / (t_ii + t_ij + t_ji + t_jj), unit diagonal."""
    tt = np.asarray(theta_tilde, dtype=float)
    if tt.ndim != 2 or tt.shape[0] != tt.shape[1] or np.any(tt < -1e-12) or not np.all(np.isfinite(tt)):
        raise PortfolioError("normalized decomposition must be a finite nonnegative square matrix")
    d = np.diag(tt)
    pair = tt + tt.T
    denom = d[:, None] + d[None, :] + pair
    if np.any(denom <= 0):
        raise PortfolioError("zero pairwise mass in the decomposition")
    pci = 2.0 * pair / denom
    np.fill_diagonal(pci, 1.0)
    return pci


def mcop_weights(pci) -> np.ndarray:
    """Minimum-connectedness weights from a pairwise connectedness index matrix."""
    pci = np.asarray(pci, dtype=float)
    if not np.allclose(pci, pci.T, atol=1e-12):
        raise PortfolioError("PCI matrix must be symmetric")
    return _minimum_risk(pci, "PCI")


def hedging_effectiveness(portfolio_returns, asset_returns) -> tuple[float, float]:
    """HE = 1 - var(portfolio)/var(asset) with a two-sided F-test p-value."""
    rp = np.asarray(portfolio_returns, dtype=float)
    ra = np.asarray(asset_returns, dtype=float)
    if rp.shape != ra.shape:
        raise PortfolioError("portfolio and asset series are not aligned")
    if len(rp) < 30:
        raise PortfolioError("need at least 30 observations")
    var_a = np.var(ra, ddof=1)
    if var_a == 0:
        raise PortfolioError("asset has zero variance")
    var_p = np.var(rp, ddof=1)
    he = 1.0 - var_p / var_a
    df = len(rp) - 1
    ratio = var_a / var_p if var_p > 0 else np.inf
    p = 2.0 * min(stats.f.cdf(ratio, df, df), stats.f.sf(ratio, df, df))
    return float(he), float(min(p, 1.0))


def value_at_risk(returns, alpha: float = 0.05) -> float:
    return float(abs(np.quantile(np.asarray(returns, dtype=float), alpha)))


def conditional_value_at_risk(returns, alpha: float = 0.05) -> float:
    r = np.asarray(returns, dtype=float)
    q = np.quantile(r, alpha)
    return float(abs(r[r <= q].mean()))


def sharpe(returns, denominator: str = "stddev", alpha: float = 0.05) -> float:
    """Mean return over std dev, |VaR| or |CVaR| (zero risk-free rate)."""
    r = np.asarray(returns, dtype=float)
    if len(r) < 30:
        raise PortfolioError("need at least 30 observations")
    if denominator == "stddev":
        risk = float(np.std(r, ddof=1))
    elif denominator in ("var", "cvar"):
        if not 0 < alpha < 0.5:
            raise PortfolioError("alpha must lie in (0, 0.5)")
        risk = value_at_risk(r, alpha) if denominator == "var" else conditional_value_at_risk(r, alpha)
    else:
        raise PortfolioError(f"unknown Sharpe denominator {denominator!r}")
    if risk == 0:
        raise PortfolioError(f"zero {denominator} denominator")
    return float(r.mean() / risk)


def _safe_sharpe(r, kind):
    try:
        return sharpe(r, kind)
    except PortfolioError:
        return float("nan")


def realized_returns(weight_path: WeightPath, panel: ReturnPanel) -> pd.Series:
    """Portfolio return on the row after each rebalance date."""
    pos = np.searchsorted(panel.dates, weight_path.dates)
    if np.any(pos >= panel.T) or np.any(panel.dates[np.minimum(pos, panel.T - 1)] != weight_path.dates):
        raise PortfolioError("weight dates are not rows of the return panel")
    if np.any(pos + 1 >= panel.T):
        raise PortfolioError("no return is available after the last rebalance date")
    if weight_path.labels != panel.labels:
        raise PortfolioError("weight path and panel have different series")
    nxt = pos + 1
    r = np.einsum("dn,dn->d", weight_path.weights, panel.values[nxt])
    return pd.Series(r, index=pd.to_datetime(panel.dates[nxt]), name="portfolio")


def cumulative_returns(weight_path: WeightPath, panel: ReturnPanel) -> pd.Series:
    """Cumulative sum of realized portfolio log returns."""
    return realized_returns(weight_path, panel).cumsum().rename("cumulative")


def _report(port: pd.Series, assets: np.ndarray, weights: np.ndarray, labels) -> PerformanceReport:
    r = port.to_numpy()
    he = np.full(len(labels), np.nan)
    hp = np.full(len(labels), np.nan)
    for i in range(len(labels)):
        try:
            he[i], hp[i] = hedging_effectiveness(r, assets[:, i])
        except PortfolioError:
            pass
    summary = pd.DataFrame({
        "series": list(labels),
        "Mean": weights.mean(axis=0),
        "Std.Dev.": weights.std(axis=0, ddof=1) if len(weights) > 1 else np.zeros(len(labels)),
        "5%": np.quantile(weights, 0.05, axis=0),
        "95%": np.quantile(weights, 0.95, axis=0),
    })
    return PerformanceReport(
        mean_return=float(r.mean()),
        std_dev=float(np.std(r, ddof=1)) if len(r) > 1 else 0.0,
        sharpe_std=_safe_sharpe(r, "stddev"),
        sharpe_var=_safe_sharpe(r, "var"),
        sharpe_cvar=_safe_sharpe(r, "cvar"),
        he=he,
        he_pvalue=hp,
        portfolio_returns=port,
        cumulative=port.cumsum().rename("cumulative"),
        labels=tuple(labels),
        weight_summary=summary,
    )


def _mcop_window(values, p, tau, cfg: RollingConfig) -> np.ndarray:
    model = fit_qvar(values, p, tau, cfg.sigma_estimator)
    psi = vma_coefficients(model, max(cfg.horizon, 1))
    return connectedness(psi, model.sigma, cfg.horizon, cfg.denominator, tau=tau).theta_tilde


def backtest(panel: ReturnPanel, strategy: str = "mvp", tau: float = 0.5,
             config: RollingConfig = RollingConfig(), break_date=None,
             connectedness_result: RollingResult | None = None) -> tuple[WeightPath, PerformanceReport]:
    """Rolling out-of-sample backtest; weights set at a window end earn the next row's return.

    For ``mcop`` a precomputed rolling result on the same panel/config can be
    passed to reuse its total-connectedness tables.
    """
    if strategy not in STRATEGIES:
        raise PortfolioError(f"unknown strategy {strategy!r}")
    if panel.T < config.window + 1:
        raise PortfolioError(f"need at least window + 1 = {config.window + 1} rows")
    ends = window_ends(panel.T - 1, config.window, config.step)
    all_ends = window_ends(panel.T, config.window, config.step)
    dates, weights, failures = [], [], []
    for e in ends:
        block = panel.values[e - config.window + 1: e + 1]
        try:
            if panel.n == 1:
                w = np.ones(1)
            elif strategy == "mvp":
                w = mvp_weights(np.cov(block, rowvar=False))
            elif strategy == "mcp":
                w = mcp_weights(_corr(block))
            else:
                if connectedness_result is not None:
                    d = int(np.searchsorted(all_ends, e))
                    tables = connectedness_result.tables.get((d, tau))
                    if tables is None:
                        raise PortfolioError("connectedness unavailable for this window")
                    tt = tables["total"].theta_tilde
                else:
                    tt = _mcop_window(block, config.p, tau, config)
                w = mcop_weights(pairwise_connectedness_index(tt))
        except (ValueError, np.linalg.LinAlgError) as exc:
            failures.append((str(panel.dates[e]), str(exc)))
            continue
        dates.append(panel.dates[e])
        weights.append(w)
    if not weights:
        raise PortfolioError("no window produced weights")
    path = WeightPath(np.array(dates, dtype="datetime64[D]"), panel.labels, np.vstack(weights))
    port = realized_returns(path, panel)
    nxt = np.searchsorted(panel.dates, path.dates) + 1
    assets = panel.values[nxt]
    report = _report(port, assets, path.weights, panel.labels)
    report.failures = failures
    if break_date is not None:
        when = np.datetime64(pd.Timestamp(break_date).date(), "D")
        realized_dates = panel.dates[nxt]
        for name, sel in (("pre", realized_dates < when), ("post", realized_dates >= when)):
            if sel.sum() >= 2:
                report.sub_reports[name] = _report(port[sel], assets[sel], path.weights[sel], panel.labels)
    return path, report


def _corr(block: np.ndarray) -> np.ndarray:
    cov = np.cov(block, rowvar=False)
    sd = np.sqrt(np.diag(cov))
    if np.any(sd == 0):
        raise PortfolioError("zero-variance asset; correlation undefined")
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return corr
