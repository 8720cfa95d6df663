"""Synthetic return panels for demos, the CLI `simulate` command and tests."""
from __future__ import annotations

import numpy as np
import pandas as pd
from scipy.linalg import solve_discrete_lyapunov

from .panel import PricePanel, ReturnPanel


def business_dates(T: int, start: str = "2020-01-01") -> np.ndarray:
    return pd.bdate_range(start, periods=T).values.astype("datetime64[D]")


def simulate_var(phi, T: int, rng: np.random.Generator, chol=None, df: float | None = None,
                 burn: int = 200, scale: float = 1.0) -> np.ndarray:
    """Simulate y_t = sum_j phi_j y_{t-j} + e_t with Gaussian or Student-t shocks.

    ``chol`` is a lower-triangular loading of the shocks; ``df`` switches to
    standardized Student-t innovations.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    p, n, _ = phi.shape
    total = T + burn
    if df is None:
        e = rng.standard_normal((total, n))
    else:
        e = rng.standard_t(df, (total, n)) * np.sqrt((df - 2.0) / df)
    if chol is not None:
        e = e @ np.asarray(chol, dtype=float).T
    y = np.zeros((total, n))
    for t in range(total):
        acc = e[t].copy()
        for j in range(1, min(p, t) + 1):
            acc += phi[j - 1] @ y[t - j]
        y[t] = acc
    return scale * y[burn:]


def common_factor_returns(n: int, T: int, rng: np.random.Generator, loading: float = 1.0,
                          df: float = 3.0, idio: float = 1.0, scale: float = 0.01) -> np.ndarray:
    """Returns driven by one heavy-tailed common shock plus Gaussian idiosyncratic noise."""
    f = rng.standard_t(df, T)
    return scale * (loading * f[:, None] + idio * rng.standard_normal((T, n)))


def cluster_returns(n_cluster: int, T: int, rng: np.random.Generator, spill: float = 0.7,
                    rho: float = 0.0, scale: float = 0.01) -> np.ndarray:
    """A block of ``n_cluster`` assets linked by lagged spillovers plus one independent asset.

    Member i loads ``spill`` on member i+1's previous return (cyclically), so
    the block is strongly connected at forecast horizons while contemporaneous
    correlation stays at ``rho``.  The last column is white noise scaled to the
    members' unconditional variance, so variances alone do not separate them.
    """
    n = n_cluster + 1
    phi = np.zeros((n, n))
    for i in range(n_cluster):
        phi[i, (i + 1) % n_cluster] = spill
    shock = np.eye(n)
    shock[:n_cluster, :n_cluster] = np.full((n_cluster, n_cluster), rho) + (1 - rho) * np.eye(n_cluster)
    chol = np.linalg.cholesky(shock)
    stationary = solve_discrete_lyapunov(phi, shock)
    chol[-1, -1] = np.sqrt(stationary[0, 0])
    return simulate_var(phi, T, rng, chol=chol, scale=scale)


def synthetic_panel(n: int, T: int, seed: int, dgp: str = "factor") -> ReturnPanel:
    """Seeded return panel with labels S1..Sn on business days."""
    rng = np.random.default_rng(seed)
    if dgp == "factor":
        values = common_factor_returns(n, T, rng, loading=0.7)
    elif dgp == "var":
        phi = 0.15 * np.eye(n) + 0.05 * (rng.random((n, n)) < 0.2)
        values = simulate_var(phi, T, rng, scale=0.01)
    elif dgp == "noise":
        values = 0.01 * rng.standard_normal((T, n))
    else:
        raise ValueError(f"unknown dgp {dgp!r}")
    return ReturnPanel(business_dates(T), [f"S{i + 1}" for i in range(n)], values)


def prices_from_returns(returns: ReturnPanel, start_price: float = 100.0) -> PricePanel:
    """Price panel whose log returns reproduce ``returns`` (one extra leading date)."""
    first = np.datetime64(pd.Timestamp(returns.dates[0]) - pd.offsets.BDay(1), "D")
    levels = start_price * np.exp(np.vstack([np.zeros((1, returns.n)), np.cumsum(returns.values, axis=0)]))
    return PricePanel(np.concatenate([[first], returns.dates]), returns.labels, levels)
