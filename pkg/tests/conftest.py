import cmath
import math

import numpy as np
import pytest

PHI_ORACLE = np.array([[0.5, 0.2], [0.0, 0.3]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240224)


def matmul_loops(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [[sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)] for i in range(n)]


def transpose(A):
    return [list(r) for r in zip(*A)]


def psi_by_powers(phi, H):
    """Psi_h for a VAR(1) as explicit matrix powers phi^h."""
    n = len(phi)
    out = [[[float(i == j) for j in range(n)] for i in range(n)]]
    for _ in range(H):
        out.append(matmul_loops(out[-1], phi))
    return out


def gfevd_bruteforce(phi, sigma, H):
    """Term-by-term expansion of the generalized FEVD with explicit loops."""
    phi = np.asarray(phi).tolist()
    sigma = np.asarray(sigma).tolist()
    n = len(sigma)
    psis = psi_by_powers(phi, H)
    theta = [[0.0] * n for _ in range(n)]
    for i in range(n):
        den = 0.0
        for h in range(H + 1):
            ps = matmul_loops(psis[h], sigma)
            pspt = matmul_loops(ps, transpose(psis[h]))
            den += pspt[i][i]
        for j in range(n):
            num = 0.0
            for h in range(H + 1):
                ps = matmul_loops(psis[h], sigma)
                num += ps[i][j] ** 2
            theta[i][j] = num / sigma[j][j] / den
    return np.array(theta)


def spectral_bruteforce(psis, sigma, omega):
    """Numerator/denominator at one frequency with explicit complex arithmetic."""
    n = len(sigma)
    resp = [[sum(psis[h][i][j] * cmath.exp(-1j * omega * h) for h in range(len(psis)))
             for j in range(n)] for i in range(n)]
    rs = [[sum(resp[i][t] * sigma[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    num = [[abs(rs[i][j]) ** 2 / sigma[j][j] for j in range(n)] for i in range(n)]
    den = [sum(rs[i][t] * resp[i][t].conjugate() for t in range(n)).real for i in range(n)]
    return np.array(num), np.array(den)


def random_model(rng, n=None, p=None, H=20):
    """Random stable VAR coefficients and a random positive-definite covariance."""
    n = n or int(rng.integers(2, 7))
    p = p or int(rng.integers(1, 3))
    phi = rng.normal(0, 0.25, (p, n, n))
    from qconnect.qvar import companion_radius
    while companion_radius(phi) >= 0.95:
        phi *= 0.8
    A = rng.normal(size=(n, n))
    sigma = A @ A.T + 0.1 * np.eye(n)
    return phi, sigma


def pinball_grid_oracle(y, tau, step=1e-3):
    y = np.asarray(y, float)
    cands = np.unique(np.concatenate([np.arange(y.min() - 1, y.max() + 1, step), y]))
    losses = [np.sum((y - c) * (tau - (y - c < 0))) for c in cands]
    k = int(np.argmin(losses))
    return cands[k], losses[k]


def quantile_type7(x, q):
    s = sorted(x)
    h = (len(s) - 1) * q
    lo = math.floor(h)
    return s[lo] + (h - lo) * (s[min(lo + 1, len(s) - 1)] - s[lo])
