"""Linear quantile regression by pinball-loss minimization.

The solver is a primal-dual interior-point method (Frisch-Newton with
Mehrotra predictor-corrector steps) on the bounded dual LP of the check-loss
problem.  Several responses that share one design matrix are solved as a
batch, which is how every QVAR equation in a window is estimated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ITER = 200
GAP_TOL = 1e-8
COND_LIMIT = 1e10
_STEP_DAMP = 0.99995


class QuantileRegressionError(ValueError):
    """Raised for invalid quantile-regression inputs (rank, shape, finiteness)."""


@dataclass(frozen=True)
class QuantileFit:
    tau: float
    coefficients: np.ndarray
    residuals: np.ndarray
    objective: float
    iterations: int
    converged: bool


def pinball_loss(residuals, tau: float) -> float:
    """Sum of check losses rho_tau(u) = u * (tau - 1{u < 0})."""
    u = np.asarray(residuals, dtype=float)
    return float(np.sum(u * (tau - (u < 0))))


def _validate(design: np.ndarray, responses: np.ndarray, tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise QuantileRegressionError(f"tau must lie strictly inside (0, 1), got {tau}")
    if design.ndim != 2:
        raise QuantileRegressionError("design must be a 2-D matrix")
    T, k = design.shape
    if responses.shape[0] != T:
        raise QuantileRegressionError(
            f"design has {T} rows but response has {responses.shape[0]}"
        )
    if T <= k:
        raise QuantileRegressionError(f"need more observations than regressors (T={T}, k={k})")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(responses))):
        raise QuantileRegressionError("non-finite entries in design or response")


def _column_scale(design: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(design), axis=0)
    scale[scale == 0] = 1.0
    return scale


def _step_length(v: np.ndarray, dv: np.ndarray) -> np.ndarray:
    # largest step keeping v + f*dv >= 0, row-wise; 1e20 when unconstrained
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dv < 0, -v / dv, np.inf)
    out = ratio.min(axis=1)
    return np.where(np.isfinite(out), out, 1e20)


def _frisch_newton(X: np.ndarray, Y: np.ndarray, tau: float, max_iter: int, tol: float):
    """Batched Frisch-Newton solve. ``Y`` is (m, T); returns (beta, iters, converged)."""
    m, T = Y.shape
    c = -Y
    b = (1.0 - tau) * X.sum(axis=0)
    x = np.full((m, T), 1.0 - tau)
    s = 1.0 - x
    XtX = X.T @ X
    y = np.linalg.solve(XtX, X.T @ c.T).T
    r = c - y @ X.T
    r = r + 0.001 * (r == 0)
    z = np.where(r > 0, r, 0.0)
    w = z - r

    def duality_gap():
        primal = np.sum(c * x, axis=1)
        return primal - y @ b + w.sum(axis=1), np.abs(primal)

    gap, scale = duality_gap()
    active = gap > tol * (1.0 + scale)
    iters = np.zeros(m, dtype=int)
    it = 0
    while active.any() and it < max_iter:
        it += 1
        iters[active] += 1
        q = 1.0 / (z / x + w / s)
        r = z - w
        M = np.matmul((q[:, :, None] * X).transpose(0, 2, 1), X)
        dy = np.linalg.solve(M, ((q * r) @ X)[..., None])[..., 0]
        dx = q * (dy @ X.T - r)
        ds = -dx
        dz = -z * (dx / x + 1.0)
        dw = -w * (ds / s + 1.0)
        fp = np.minimum(_STEP_DAMP * np.minimum(_step_length(x, dx), _step_length(s, ds)), 1.0)
        fd = np.minimum(_STEP_DAMP * np.minimum(_step_length(w, dw), _step_length(z, dz)), 1.0)

        correct = np.minimum(fp, fd) < 1.0
        if correct.any():
            mu = np.sum(z * x + w * s, axis=1)
            g = np.sum(
                (z + fd[:, None] * dz) * (x + fp[:, None] * dx)
                + (w + fd[:, None] * dw) * (s + fp[:, None] * ds),
                axis=1,
            )
            mu = mu * (g / mu) ** 3 / (2.0 * T)
            dxdz = dx * dz
            dsdw = ds * dw
            xinv = 1.0 / x
            sinv = 1.0 / s
            xi = mu[:, None] * (xinv - sinv)
            rhs = (q * (r + dxdz - dsdw - xi)) @ X
            dy2 = np.linalg.solve(M, rhs[..., None])[..., 0]
            dx2 = q * (dy2 @ X.T + xi - r - dxdz + dsdw)
            ds2 = -dx2
            dz2 = mu[:, None] * xinv - z - xinv * z * dx2 - dxdz
            dw2 = mu[:, None] * sinv - w - sinv * w * ds2 - dsdw
            fp2 = np.minimum(_STEP_DAMP * np.minimum(_step_length(x, dx2), _step_length(s, ds2)), 1.0)
            fd2 = np.minimum(_STEP_DAMP * np.minimum(_step_length(w, dw2), _step_length(z, dz2)), 1.0)
            sel = correct[:, None]
            dy = np.where(sel, dy2, dy)
            dx = np.where(sel, dx2, dx)
            ds = np.where(sel, ds2, ds)
            dz = np.where(sel, dz2, dz)
            dw = np.where(sel, dw2, dw)
            fp = np.where(correct, fp2, fp)
            fd = np.where(correct, fd2, fd)

        fp = np.where(active, fp, 0.0)[:, None]
        fd = np.where(active, fd, 0.0)[:, None]
        x = x + fp * dx
        s = s + fp * ds
        y = y + fd * dy
        w = w + fd * dw
        z = z + fd * dz
        gap, scale = duality_gap()
        active = active & (gap > tol * (1.0 + scale))
    return -y, iters, ~active


def _vertex_polish(X: np.ndarray, yv: np.ndarray, beta: np.ndarray, tau: float) -> np.ndarray:
    """Snap an interior solution to the basic solution through its k smallest residuals."""
    k = X.shape[1]
    resid = yv - X @ beta
    basis = np.argsort(np.abs(resid), kind="stable")[:k]
    Xh = X[basis]
    if np.linalg.cond(Xh) > 1e12:
        return beta
    candidate = np.linalg.solve(Xh, yv[basis])
    if pinball_loss(yv - X @ candidate, tau) <= pinball_loss(resid, tau):
        return candidate
    return beta


def fit_quantile_many(design, responses, tau: float, max_iter: int = MAX_ITER,
                      tol: float = GAP_TOL) -> list[QuantileFit]:
    """Fit one quantile regression per column of ``responses`` on a shared design."""
    X = np.asarray(design, dtype=float)
    Y = np.asarray(responses, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    _validate(X, Y, tau)
    col = _column_scale(X)
    Xs = X / col
    cond = np.linalg.cond(Xs)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise QuantileRegressionError(f"design is rank deficient or ill-conditioned (cond={cond:.3g})")
    yscale = np.max(np.abs(Y), axis=0)
    yscale[yscale == 0] = 1.0
    Ys = Y / yscale

    betas, iters, converged = _frisch_newton(Xs, Ys.T, tau, max_iter, tol)
    fits = []
    for j in range(Y.shape[1]):
        beta_s = _vertex_polish(Xs, Ys[:, j], betas[j], tau)
        beta = beta_s * yscale[j] / col
        resid = Y[:, j] - X @ beta
        fits.append(
            QuantileFit(
                tau=float(tau),
                coefficients=beta,
                residuals=resid,
                objective=pinball_loss(resid, tau),
                iterations=int(iters[j]),
                converged=bool(converged[j]),
            )
        )
    return fits


def fit_quantile(design, response, tau: float, max_iter: int = MAX_ITER,
                 tol: float = GAP_TOL) -> QuantileFit:
    """Minimize sum_t rho_tau(y_t - x_t'beta) over beta.

    The first design column is conventionally all ones.  When several
    minimizers exist any of them may be returned; compare objectives.
    """
    response = np.asarray(response, dtype=float)
    if response.ndim != 1:
        raise QuantileRegressionError("response must be a vector")
    return fit_quantile_many(design, response, tau, max_iter, tol)[0]
