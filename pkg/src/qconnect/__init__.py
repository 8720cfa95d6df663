"""Quantile connectedness: QVAR estimation, time/frequency spillover measures,
rolling dynamics, connectedness-aware portfolios and break tests."""

__version__ = "0.1.0"

from .panel import PricePanel, ReturnPanel, clean, load_csv, log_returns, split
from .quantreg import QuantileFit, fit_quantile, pinball_loss
from .qvar import QvarModel, VmaCoefficients, fit_qvar, select_lag_bic, vma_coefficients
from .connectedness import ConnectednessTable, gfevd, measures, normalize_rows
from .frequency import DEFAULT_BANDS, FrequencyBand, band_aggregate, band_measures, spectral_gfevd
from .rolling import RollingConfig, quantile_surface, relative_tail_dependence, rolling_connectedness

__all__ = [
    "PricePanel", "ReturnPanel", "clean", "load_csv", "log_returns", "split",
    "QuantileFit", "fit_quantile", "pinball_loss",
    "QvarModel", "VmaCoefficients", "fit_qvar", "select_lag_bic", "vma_coefficients",
    "ConnectednessTable", "gfevd", "measures", "normalize_rows",
    "DEFAULT_BANDS", "FrequencyBand", "band_aggregate", "band_measures", "spectral_gfevd",
    "RollingConfig", "quantile_surface", "relative_tail_dependence", "rolling_connectedness",
]
