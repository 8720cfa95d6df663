"""Generalized FEVD and the directional/total connectedness measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .qvar import VmaCoefficients

TCI_DENOMINATORS = ("n", "n-1")


class ConnectednessError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectednessTable:
    """Normalized shares plus measures in percent.

    ``npdc[i, j] = 100 * (theta_tilde[i, j] - theta_tilde[j, i])``; a positive
    entry means series i takes more from j than it gives back, so j is the
    net transmitter of the pair.
    """

    theta_tilde: np.ndarray
    to: np.ndarray
    from_: np.ndarray
    net: np.ndarray
    npdc: np.ndarray
    tci: float
    horizon: int | None = None
    tau: float | None = None
    band: str = "total"

    @property
    def n(self) -> int:
        return self.theta_tilde.shape[0]

    def tci_from_from(self, denominator: str = "n") -> float:
        return float(self.from_.sum() / _tci_divisor(self.n, denominator))

    def series_frame(self, labels) -> pd.DataFrame:
        return pd.DataFrame({"series": list(labels), "TO": self.to, "FROM": self.from_, "NET": self.net})


def _tci_divisor(n: int, denominator: str) -> int:
    if denominator == "n":
        return n
    if denominator == "n-1":
        if n < 2:
            raise ConnectednessError("n-1 denominator needs at least two series")
        return n - 1
    raise ConnectednessError(f"unknown TCI denominator {denominator!r}")


def _check_sigma(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    sigma = (sigma + sigma.T) / 2.0
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise ConnectednessError("covariance has a zero or negative diagonal entry")
    return sigma


def gfevd(psi: VmaCoefficients, sigma, H: int) -> np.ndarray:
    """Raw generalized FEVD at horizon H, summing h = 0..H."""
    if H < 0 or H > psi.h_trunc:
        raise ConnectednessError(f"horizon {H} outside 0..{psi.h_trunc}")
    sigma = _check_sigma(sigma)
    P = psi.psi[: H + 1]
    PS = P @ sigma
    num = np.sum(PS**2, axis=0) / np.diag(sigma)[None, :]
    den = np.einsum("hik,hik->i", PS, P)  # diag of sum_h Psi_h Sigma Psi_h'
    return num / den[:, None]


def normalize_rows(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    sums = theta.sum(axis=1)
    if np.any(sums <= 0) or not np.all(np.isfinite(sums)):
        raise ConnectednessError("every row of the decomposition needs a positive finite sum")
    return theta / sums[:, None]


def _check_tilde(theta_tilde: np.ndarray, row_total: np.ndarray | None = None) -> np.ndarray:
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    if theta_tilde.ndim != 2 or theta_tilde.shape[0] != theta_tilde.shape[1]:
        raise ConnectednessError("normalized decomposition must be a square matrix")
    if not np.all(np.isfinite(theta_tilde)) or np.any(theta_tilde < -1e-12):
        raise ConnectednessError("normalized decomposition must be finite and nonnegative")
    if row_total is not None and not np.allclose(theta_tilde.sum(axis=1), row_total, atol=1e-8):
        raise ConnectednessError("rows of the normalized decomposition must sum to one")
    return theta_tilde


def measures_from_shares(theta_tilde, denominator: str = "n", horizon=None, tau=None,
                         band: str = "total") -> ConnectednessTable:
    """Measures for any nonnegative share matrix (rows need not sum to one)."""
    tt = _check_tilde(theta_tilde)
    off = tt - np.diag(np.diag(tt))
    to = 100.0 * off.sum(axis=0)
    frm = 100.0 * off.sum(axis=1)
    npdc = 100.0 * (tt - tt.T)
    tci = float(to.sum() / _tci_divisor(tt.shape[0], denominator))
    return ConnectednessTable(tt, to, frm, to - frm, npdc, tci, horizon, tau, band)


def measures(theta_tilde, denominator: str = "n", horizon=None, tau=None,
             band: str = "total") -> ConnectednessTable:
    """NPDC, TO, FROM, NET and TCI (percent) from a row-stochastic share matrix."""
    _check_tilde(theta_tilde, row_total=np.ones(np.shape(theta_tilde)[0]))
    return measures_from_shares(theta_tilde, denominator, horizon, tau, band)


def connectedness(psi: VmaCoefficients, sigma, H: int, denominator: str = "n",
                  tau=None) -> ConnectednessTable:
    return measures(normalize_rows(gfevd(psi, sigma, H)), denominator, horizon=H, tau=tau)
