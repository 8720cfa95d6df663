"""Rolling-window connectedness across a quantile grid."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .connectedness import ConnectednessTable, connectedness
from .frequency import DEFAULT_BANDS, DEFAULT_GRID_POINTS, frequency_connectedness
from .panel import ReturnPanel
from .qvar import VmaCoefficients, fit_qvar, select_lag_bic, vma_coefficients

SURFACE_TAUS = tuple(round(0.05 * k, 2) for k in range(1, 20))


class RollingError(ValueError):
    pass


@dataclass(frozen=True)
class RollingConfig:
    window: int = 200
    horizon: int = 20
    p: int = 1
    lag_policy: str = "fixed"  # or "bic"
    p_max: int = 4
    reselect_each_window: bool = False
    bic_variant: str = "ols"
    taus: tuple = (0.05, 0.5, 0.95)
    bands: tuple = DEFAULT_BANDS
    step: int = 1
    grid_points: int = DEFAULT_GRID_POINTS
    denominator: str = "n"
    sigma_estimator: str = "uncentered"
    frequency: bool = True
    n_jobs: int = 1

    def problems(self, n: int | None = None) -> list[str]:
        out = []
        if self.step < 1:
            out.append("step must be >= 1")
        if self.horizon < 0:
            out.append("horizon must be >= 0")
        if self.p < 1:
            out.append("p must be >= 1")
        if self.lag_policy not in ("fixed", "bic"):
            out.append(f"lag_policy must be 'fixed' or 'bic', got {self.lag_policy!r}")
        if not self.taus or any(not 0 < t < 1 for t in self.taus):
            out.append("taus must be a non-empty list inside (0, 1)")
        if n is not None:
            p_top = self.p_max if self.lag_policy == "bic" else self.p
            if self.window <= n * p_top + 10:
                out.append(f"window {self.window} must exceed n*p + 10 = {n * p_top + 10}")
        if self.n_jobs < 1:
            out.append("n_jobs must be >= 1")
        return out

    def validate(self, n: int | None = None) -> None:
        issues = self.problems(n)
        if issues:
            raise RollingError("; ".join(issues))

    def metadata(self) -> dict:
        return {
            "window": self.window,
            "horizon": self.horizon,
            "p": self.p,
            "lag_policy": self.lag_policy,
            "p_max": self.p_max,
            "reselect_each_window": self.reselect_each_window,
            "bic_variant": self.bic_variant,
            "taus": list(self.taus),
            "bands": [{"label": b.label, "a": b.a, "b": b.b, "horizon_note": b.horizon_note} for b in self.bands],
            "step": self.step,
            "frequency_grid_points": self.grid_points,
            "frequency_grid": "midpoint (k+1/2)pi/K on (0, pi]",
            "frequency_vma_truncation": "horizon",
            "band_normalization": "whole-range row sums",
            "tci_denominator": self.denominator,
            "sigma_estimator": self.sigma_estimator,
        }


@dataclass
class RollingResult:
    labels: tuple
    dates: np.ndarray
    taus: tuple
    band_labels: tuple
    tables: dict = field(default_factory=dict)  # (date index, tau) -> {band: table}
    failures: list = field(default_factory=list)  # (date, tau, message)
    lags: dict = field(default_factory=dict)  # (date index, tau) -> p used
    explosive: set = field(default_factory=set)

    def table(self, date_index: int, tau: float, band: str = "total") -> ConnectednessTable:
        return self.tables[(date_index, tau)][band]

    def series(self, tau: float, band: str = "total", measure: str = "TCI", label: str | None = None) -> pd.Series:
        """One measure as a dated series; failed windows are NaN."""
        j = None if label is None else self.labels.index(label)
        out = np.full(len(self.dates), np.nan)
        for d in range(len(self.dates)):
            tabs = self.tables.get((d, tau))
            if tabs is None:
                continue
            t = tabs[band]
            out[d] = t.tci if measure == "TCI" else {"TO": t.to, "FROM": t.from_, "NET": t.net}[measure][j]
        return pd.Series(out, index=pd.to_datetime(self.dates), name=f"{measure}:{band}:{tau}")

    def long_frame(self, pairwise: bool = False) -> pd.DataFrame:
        """Long format: date, tau, band, series, measure, value."""
        rows = []
        date_text = pd.to_datetime(self.dates).strftime("%Y-%m-%d")
        for d in range(len(self.dates)):
            for tau in self.taus:
                tabs = self.tables.get((d, tau))
                if tabs is None:
                    continue
                for band in self.band_labels:
                    t = tabs[band]
                    rows.append((date_text[d], tau, band, "ALL", "TCI", t.tci))
                    for i, lab in enumerate(self.labels):
                        rows.append((date_text[d], tau, band, lab, "TO", t.to[i]))
                        rows.append((date_text[d], tau, band, lab, "FROM", t.from_[i]))
                        rows.append((date_text[d], tau, band, lab, "NET", t.net[i]))
                    if pairwise:
                        for i, a in enumerate(self.labels):
                            for j, b in enumerate(self.labels):
                                if i != j:
                                    rows.append((date_text[d], tau, band, f"{a}|{b}", "NPDC", t.npdc[i, j]))
        return pd.DataFrame(rows, columns=["date", "tau", "band", "series", "measure", "value"])

    def failure_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.failures, columns=["date", "tau", "message"])


@dataclass(frozen=True)
class RollingSurface:
    dates: np.ndarray
    taus: tuple
    bands: tuple
    values: np.ndarray  # (date, tau, band) for TCI or (date, tau, band, series) for NET
    failed: np.ndarray  # (date, tau) mask of windows that did not produce a table
    labels: tuple = ()

    def frame(self, band: str = "total", series: str | None = None) -> pd.DataFrame:
        b = self.bands.index(band)
        vals = self.values[:, :, b] if series is None else self.values[:, :, b, self.labels.index(series)]
        return pd.DataFrame(vals, index=pd.to_datetime(self.dates), columns=list(self.taus))


def window_ends(T: int, window: int, step: int) -> np.ndarray:
    if T < window:
        raise RollingError(f"panel has {T} rows but the window needs {window}")
    return np.arange(window - 1, T, step)


def _window_tables(values: np.ndarray, p: int, tau: float, cfg: RollingConfig) -> tuple[dict, bool]:
    model = fit_qvar(values, p, tau, cfg.sigma_estimator)
    psi = vma_coefficients(model, max(cfg.horizon, 1))
    total = connectedness(psi, model.sigma, cfg.horizon, cfg.denominator, tau=tau)
    tables = {"total": total}
    if cfg.frequency and cfg.bands:
        psi_h = VmaCoefficients(psi.psi[: cfg.horizon + 1])
        tables.update(frequency_connectedness(psi_h, model.sigma, cfg.bands, cfg.grid_points,
                                              cfg.denominator, cfg.horizon, tau))
    return tables, model.explosive


def _run_window(args):
    d, values, taus, p, cfg = args
    if cfg.lag_policy == "bic" and cfg.reselect_each_window:
        try:
            p = select_lag_bic(values, cfg.p_max, cfg.bic_variant)
        except ValueError as exc:
            return d, p, [(tau, None, False, str(exc)) for tau in taus]
    out = []
    for tau in taus:
        try:
            tables, explosive = _window_tables(values, p, tau, cfg)
            out.append((tau, tables, explosive, None))
        except (ValueError, np.linalg.LinAlgError) as exc:
            out.append((tau, None, False, str(exc)))
    return d, p, out


def rolling_connectedness(panel: ReturnPanel, config: RollingConfig = RollingConfig()) -> RollingResult:
    """Fit every window x tau; failures are recorded and skipped, never filled."""
    config.validate(panel.n)
    ends = window_ends(panel.T, config.window, config.step)
    p = config.p
    if config.lag_policy == "bic" and not config.reselect_each_window:
        p = select_lag_bic(panel, config.p_max, config.bic_variant)
    band_labels = ("total",) + (tuple(b.label for b in config.bands) if config.frequency else ())
    result = RollingResult(panel.labels, panel.dates[ends], tuple(config.taus), band_labels)
    tasks = [(d, panel.values[e - config.window + 1: e + 1], tuple(config.taus), p, config)
             for d, e in enumerate(ends)]
    jobs = min(config.n_jobs, len(tasks), os.cpu_count() or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_window, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outputs = [_run_window(t) for t in tasks]
    for d, p_used, per_tau in sorted(outputs, key=lambda o: o[0]):
        for tau, tables, explosive, err in per_tau:
            result.lags[(d, tau)] = p_used
            if err is not None:
                result.failures.append((str(result.dates[d]), tau, err))
                continue
            result.tables[(d, tau)] = tables
            if explosive:
                result.explosive.add((d, tau))
    return result


def relative_tail_dependence(tci_upper: pd.Series, tci_lower: pd.Series) -> pd.Series:
    """Pointwise TCI(upper tail) - TCI(lower tail)."""
    if len(tci_upper) != len(tci_lower) or not tci_upper.index.equals(tci_lower.index):
        raise RollingError("upper and lower TCI series are not aligned on the same dates")
    return pd.Series(tci_upper.to_numpy() - tci_lower.to_numpy(), index=tci_upper.index,
                     name="relative_tail_dependence")


def quantile_surface(panel: ReturnPanel, config: RollingConfig | None = None,
                     result: RollingResult | None = None) -> tuple[RollingSurface, RollingSurface]:
    """TCI and per-series NET surfaces over (date, tau[, band])."""
    if config is None:
        config = RollingConfig(taus=SURFACE_TAUS)
    if len(config.taus) < 3:
        raise RollingError("a quantile surface needs at least three tau levels")
    if result is None:
        result = rolling_connectedness(panel, config)
    D, Q, B, n = len(result.dates), len(result.taus), len(result.band_labels), len(result.labels)
    tci = np.full((D, Q, B), np.nan)
    net = np.full((D, Q, B, n), np.nan)
    failed = np.ones((D, Q), dtype=bool)
    for d in range(D):
        for q, tau in enumerate(result.taus):
            tabs = result.tables.get((d, tau))
            if tabs is None:
                continue
            failed[d, q] = False
            for b, band in enumerate(result.band_labels):
                tci[d, q, b] = tabs[band].tci
                net[d, q, b] = tabs[band].net
    return (
        RollingSurface(result.dates, result.taus, result.band_labels, tci, failed),
        RollingSurface(result.dates, result.taus, result.band_labels, net, failed, result.labels),
    )


def surface_frame(surface: RollingSurface, measure: str) -> pd.DataFrame:
    """Long format of a surface, matching the rolling CSV schema."""
    rows = []
    dates = pd.to_datetime(surface.dates).strftime("%Y-%m-%d")
    for d in range(len(dates)):
        for q, tau in enumerate(surface.taus):
            if surface.failed[d, q]:
                continue
            for b, band in enumerate(surface.bands):
                if surface.values.ndim == 3:
                    rows.append((dates[d], tau, band, "ALL", measure, surface.values[d, q, b]))
                else:
                    for i, lab in enumerate(surface.labels):
                        rows.append((dates[d], tau, band, lab, measure, surface.values[d, q, b, i]))
    return pd.DataFrame(rows, columns=["date", "tau", "band", "series", "measure", "value"])
