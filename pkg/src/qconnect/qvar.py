"""Quantile VAR(p): equation-by-equation estimation, lag choice, VMA recursion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .panel import ReturnPanel
from .quantreg import fit_quantile_many, pinball_loss

SIGMA_ESTIMATORS = ("uncentered", "centered")
BIC_VARIANTS = ("ols", "checkloss")


class QvarError(ValueError):
    pass


@dataclass(frozen=True)
class QvarModel:
    tau: float
    p: int
    mu: np.ndarray
    phi: np.ndarray  # (p, n, n); phi[j-1] multiplies y_{t-j}
    residuals: np.ndarray
    sigma: np.ndarray
    sigma_estimator: str = "uncentered"
    explosive: bool = False
    iterations: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class VmaCoefficients:
    psi: np.ndarray  # (h_trunc + 1, n, n), psi[0] = I

    @property
    def h_trunc(self) -> int:
        return self.psi.shape[0] - 1


def lag_design(values: np.ndarray, p: int, start: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Regressor matrix [1, y_{t-1}', ..., y_{t-p}'] and targets y_t for t >= start."""
    T, n = values.shape
    start = p if start is None else start
    rows = T - start
    X = np.empty((rows, 1 + n * p))
    X[:, 0] = 1.0
    for j in range(1, p + 1):
        X[:, 1 + (j - 1) * n: 1 + j * n] = values[start - j: T - j]
    return X, values[start:]


def residual_covariance(residuals: np.ndarray, estimator: str = "uncentered") -> np.ndarray:
    """Residual second-moment matrix over the T - p residual rows.

    ``uncentered`` keeps the residual means (u'u / T), so a tail quantile's
    shifted residuals raise common variation; ``centered`` subtracts them.
    """
    if estimator not in SIGMA_ESTIMATORS:
        raise QvarError(f"unknown sigma estimator {estimator!r}")
    u = residuals - residuals.mean(axis=0) if estimator == "centered" else residuals
    sigma = u.T @ u / u.shape[0]
    return (sigma + sigma.T) / 2.0


def companion_radius(phi: np.ndarray) -> float:
    p, n, _ = phi.shape
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.concatenate(list(phi), axis=1)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def fit_qvar(panel: ReturnPanel | np.ndarray, p: int, tau: float,
             sigma_estimator: str = "uncentered") -> QvarModel:
    values = panel.values if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    T, n = values.shape
    if p < 1:
        raise QvarError("lag order must be at least 1")
    if T - p <= n * p + 1:
        raise QvarError(f"insufficient observations: T - p = {T - p} but need > {n * p + 1}")
    X, Y = lag_design(values, p)
    fits = fit_quantile_many(X, Y, tau)
    for i, f in enumerate(fits):
        if not f.converged:
            raise QvarError(f"quantile regression did not converge for equation {i} at tau={tau}")
    B = np.column_stack([f.coefficients for f in fits])  # (1 + n p, n)
    mu = B[0].copy()
    phi = np.stack([B[1 + j * n: 1 + (j + 1) * n].T for j in range(p)])
    resid = np.column_stack([f.residuals for f in fits])
    sigma = residual_covariance(resid, sigma_estimator)
    return QvarModel(
        tau=float(tau), p=p, mu=mu, phi=phi, residuals=resid, sigma=sigma,
        sigma_estimator=sigma_estimator,
        explosive=companion_radius(phi) >= 1.0,
        iterations=tuple(f.iterations for f in fits),
    )


def _bic_ols(values: np.ndarray, p: int, p_max: int) -> float:
    X, Y = lag_design(values, p, start=p_max)
    Tstar, n = Y.shape
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ coef
    sign, logdet = np.linalg.slogdet(resid.T @ resid / Tstar)
    if sign <= 0:
        return np.inf
    return logdet + np.log(Tstar) / Tstar * (n * n * p + n)


def _bic_checkloss(values: np.ndarray, p: int, p_max: int, tau: float) -> float:
    X, Y = lag_design(values, p, start=p_max)
    Tstar, n = Y.shape
    fits = fit_quantile_many(X, Y, tau)
    fit_term = sum(np.log(max(pinball_loss(f.residuals, tau) / Tstar, 1e-300)) for f in fits)
    return fit_term + np.log(Tstar) / (2.0 * Tstar) * (n * n * p + n)


def select_lag_bic(panel: ReturnPanel | np.ndarray, p_max: int, variant: str = "ols",
                   tau: float = 0.5) -> int:
    """Lag order in 1..p_max minimizing BIC on the sample trimmed to p_max."""
    values = panel.values if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    T, n = values.shape
    if p_max < 1:
        raise QvarError("p_max must be at least 1")
    if variant not in BIC_VARIANTS:
        raise QvarError(f"unknown BIC variant {variant!r}")
    if T - p_max <= n * p_max + 1:
        raise QvarError(f"insufficient observations for p_max={p_max}")
    if p_max == 1:
        return 1
    scores = []
    for p in range(1, p_max + 1):
        if variant == "ols":
            scores.append(_bic_ols(values, p, p_max))
        else:
            scores.append(_bic_checkloss(values, p, p_max, tau))
    return int(np.argmin(scores)) + 1


def vma_from_phi(phi: np.ndarray, h_trunc: int) -> VmaCoefficients:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    if h_trunc < 1:
        raise QvarError("h_trunc must be at least 1")
    p, n, _ = phi.shape
    psi = np.zeros((h_trunc + 1, n, n))
    psi[0] = np.eye(n)
    for h in range(1, h_trunc + 1):
        acc = np.zeros((n, n))
        for j in range(1, min(h, p) + 1):
            acc += phi[j - 1] @ psi[h - j]
        psi[h] = acc
    return VmaCoefficients(psi)


def vma_coefficients(model: QvarModel, h_trunc: int) -> VmaCoefficients:
    """Psi_0 = I, Psi_h = sum_{j<=min(h,p)} Phi_j Psi_{h-j}."""
    return vma_from_phi(model.phi, h_trunc)
