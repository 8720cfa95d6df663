"""Spectral decomposition of the generalized FEVD over frequency bands.

Frequencies live on the midpoint grid omega_k = (k + 1/2) * pi / K.  Folding
the conjugate-symmetric half of a 2K-point shifted DFT onto (0, pi], this grid
satisfies Parseval exactly for VMA sums of length <= 2K, so the whole-range
aggregate reproduces the horizon-H time-domain decomposition and the band
pieces add up to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connectedness import (
    ConnectednessError,
    ConnectednessTable,
    _check_sigma,
    measures_from_shares,
)
from .qvar import VmaCoefficients

DEFAULT_GRID_POINTS = 500


@dataclass(frozen=True)
class FrequencyBand:
    label: str
    a: float
    b: float
    horizon_note: str = ""

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= math.pi + 1e-15):
            raise ConnectednessError(f"band {self.label!r}: need 0 <= a < b <= pi, got ({self.a}, {self.b})")


SHORT = FrequencyBand("short", math.pi / 5, math.pi, "1-5 days")
MEDIUM = FrequencyBand("medium", math.pi / 20, math.pi / 5, "5-20 days")
LONG = FrequencyBand("long", 0.0, math.pi / 20, ">20 days")
DEFAULT_BANDS = (SHORT, MEDIUM, LONG)
WHOLE_RANGE = FrequencyBand("total", 0.0, math.pi, "all horizons")


@dataclass(frozen=True)
class SpectralSlice:
    omega: float
    numerator: np.ndarray  # sigma_jj^-1 |(Psi(e^-iw) Sigma)_ij|^2
    denominator: np.ndarray  # (Psi Sigma Psi^*)_ii

    @property
    def theta_raw(self) -> np.ndarray:
        return self.numerator / self.denominator[:, None]


def frequency_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if points < 1:
        raise ConnectednessError("grid needs at least one point")
    return (np.arange(points) + 0.5) * math.pi / points


def frequency_response(psi: VmaCoefficients, omega) -> np.ndarray:
    """Psi(e^{-i omega}) = sum_h Psi_h e^{-i omega h}; vectorized over ``omega``."""
    omega_arr = np.asarray(omega, dtype=float)
    h = np.arange(psi.psi.shape[0])
    phase = np.exp(-1j * np.multiply.outer(omega_arr.ravel(), h))
    n = psi.psi.shape[1]
    out = (phase @ psi.psi.reshape(len(h), n * n)).reshape(-1, n, n)
    return out[0] if omega_arr.ndim == 0 else out.reshape(omega_arr.shape + (n, n))


def spectral_arrays(psi: VmaCoefficients, sigma, omega_grid) -> tuple[np.ndarray, np.ndarray]:
    """Numerators (K, n, n) and denominators (K, n) on the grid."""
    sigma = _check_sigma(sigma)
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ConnectednessError("frequency grid must be a non-empty vector")
    if np.any(grid < 0) or np.any(grid > math.pi + 1e-15) or np.any(np.diff(grid) <= 0):
        raise ConnectednessError("frequency grid must be strictly increasing within [0, pi]")
    resp = frequency_response(psi, grid)
    rs = resp @ sigma
    num = (rs.real**2 + rs.imag**2) / np.diag(sigma)[None, None, :]
    den = np.einsum("kij,kij->ki", rs, resp.conj()).real
    return num, den


def spectral_gfevd(psi: VmaCoefficients, sigma, omega_grid) -> list[SpectralSlice]:
    num, den = spectral_arrays(psi, sigma, omega_grid)
    return [SpectralSlice(float(w), num[k], den[k]) for k, w in enumerate(np.asarray(omega_grid, float))]


def band_membership(omegas: np.ndarray, bands) -> dict[str, np.ndarray]:
    """Boolean masks assigning grid points to bands by (a, b]; a = 0 is closed."""
    masks = {}
    covered = np.zeros(len(omegas), dtype=int)
    for band in bands:
        lower = omegas >= band.a if band.a == 0.0 else omegas > band.a
        mask = lower & (omegas <= band.b)
        if not mask.any():
            raise ConnectednessError(f"band {band.label!r} contains no grid points")
        masks[band.label] = mask
        covered += mask
    if np.any(covered != 1):
        raise ConnectednessError("bands must partition the frequency grid (overlap or gap found)")
    return masks


def _aggregate(omegas, num, den, bands) -> dict[str, np.ndarray]:
    masks = band_membership(omegas, bands)
    total_den = den.sum(axis=0)
    if np.any(total_den <= 0):
        raise ConnectednessError("zero spectral mass in a series")
    # fixed-order reductions keep the output bit-stable
    return {label: num[mask].sum(axis=0) / total_den[:, None] for label, mask in masks.items()}


def band_aggregate(slices, bands=DEFAULT_BANDS) -> dict[str, np.ndarray]:
    """Raw theta(d) per band: band-summed numerators over whole-range denominators."""
    slices = list(slices)
    omegas = np.array([s.omega for s in slices])
    num = np.stack([s.numerator for s in slices])
    den = np.stack([s.denominator for s in slices])
    return _aggregate(omegas, num, den, bands)


def band_measures(theta_bands: dict, theta_tilde_total=None, denominator: str = "n",
                  horizon=None, tau=None) -> dict[str, ConnectednessTable]:
    """Per-band tables, each band normalized by the whole-range row sums."""
    if not theta_bands:
        raise ConnectednessError("no bands supplied")
    mats = [np.asarray(m, dtype=float) for m in theta_bands.values()]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ConnectednessError("band matrices differ in shape")
    whole = np.sum(mats, axis=0)
    row = whole.sum(axis=1)
    if np.any(row <= 0):
        raise ConnectednessError("zero row sum across bands")
    if theta_tilde_total is not None:
        ref = np.asarray(theta_tilde_total, dtype=float)
        if ref.shape != shape or not np.allclose(whole / row[:, None], ref, atol=1e-8, rtol=0):
            raise ConnectednessError("band aggregates do not add up to the supplied total decomposition")
    return {
        label: measures_from_shares(m / row[:, None], denominator, horizon, tau, band=label)
        for label, m in zip(theta_bands, mats)
    }


def within_frequency(slices) -> np.ndarray:
    """Per-frequency row-normalized decomposition, shape (K, n, n); diagnostic only."""
    raw = np.stack([s.theta_raw for s in slices])
    return raw / raw.sum(axis=2, keepdims=True)


def frequency_connectedness(psi: VmaCoefficients, sigma, bands=DEFAULT_BANDS,
                            grid_points: int = DEFAULT_GRID_POINTS, denominator: str = "n",
                            horizon=None, tau=None) -> dict[str, ConnectednessTable]:
    """Band tables straight from VMA coefficients on the midpoint grid."""
    if 2 * grid_points <= psi.h_trunc:
        raise ConnectednessError(
            f"grid of {grid_points} points is too coarse for {psi.h_trunc} VMA lags"
        )
    omegas = frequency_grid(grid_points)
    num, den = spectral_arrays(psi, sigma, omegas)
    return band_measures(_aggregate(omegas, num, den, bands), None, denominator, horizon, tau)
