import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import PHI_ORACLE, random_model, spectral_bruteforce
from qconnect.connectedness import ConnectednessError, connectedness, gfevd, normalize_rows
from qconnect.frequency import (
    DEFAULT_BANDS, WHOLE_RANGE, FrequencyBand, band_aggregate, band_measures, band_membership,
    frequency_connectedness, frequency_grid, frequency_response, spectral_gfevd, within_frequency,
)
from qconnect.qvar import vma_from_phi

MEASURES = ("to", "from_", "net", "npdc")


def test_response_at_zero_is_sum():
    psi = vma_from_phi(PHI_ORACLE, 30)
    np.testing.assert_allclose(frequency_response(psi, 0.0), psi.psi.sum(axis=0), atol=1e-15)


def test_response_without_dynamics_is_identity():
    psi = vma_from_phi(np.zeros((1, 3, 3)), 10)
    for w in (0.1, 1.0, math.pi):
        np.testing.assert_allclose(frequency_response(psi, w), np.eye(3), atol=1e-15)


def test_scalar_geometric_closed_form():
    psi = vma_from_phi(np.array([[[0.5]]]), 100)
    w = math.pi / 3
    assert abs(frequency_response(psi, w)[0, 0] - 1 / (1 - 0.5 * cmath.exp(-1j * w))) < 1e-6


def test_conjugate_symmetry():
    psi = vma_from_phi(PHI_ORACLE, 20)
    for w in (0.3, 1.7, 2.9):
        np.testing.assert_allclose(frequency_response(psi, 2 * math.pi - w),
                                   np.conj(frequency_response(psi, w)), atol=1e-12)


def test_slices_match_bruteforce():
    psi = vma_from_phi(PHI_ORACLE, 8)
    sigma = np.array([[1.0, 0.4], [0.4, 2.0]])
    grid = np.array([0.05, 0.7, 1.9, math.pi])
    for s in spectral_gfevd(psi, sigma, grid):
        num, den = spectral_bruteforce(psi.psi.tolist(), sigma.tolist(), s.omega)
        np.testing.assert_allclose(s.numerator, num, rtol=1e-12)
        np.testing.assert_allclose(s.denominator, den, rtol=1e-12)
        assert np.all(s.theta_raw >= 0)


def test_no_dynamics_slices():
    psi = vma_from_phi(np.zeros((1, 2, 2)), 5)
    for s in spectral_gfevd(psi, np.eye(2), frequency_grid(10)):
        np.testing.assert_allclose(s.theta_raw, np.eye(2), atol=1e-15)
    rho = 0.5
    for s in spectral_gfevd(psi, [[1, rho], [rho, 1]], frequency_grid(10)):
        assert s.numerator[0, 1] == pytest.approx(rho**2)


def test_grid_validation():
    psi = vma_from_phi(PHI_ORACLE, 5)
    with pytest.raises(ConnectednessError):
        spectral_gfevd(psi, np.eye(2), [0.5, 0.4])
    with pytest.raises(ConnectednessError):
        spectral_gfevd(psi, np.eye(2), [0.5, 4.0])


def test_single_band_equals_whole_range():
    slices = spectral_gfevd(vma_from_phi(PHI_ORACLE, 20), np.eye(2), frequency_grid(500))
    one = band_aggregate(slices, [WHOLE_RANGE])["total"]
    parts = band_aggregate(slices, DEFAULT_BANDS)
    np.testing.assert_allclose(sum(parts.values()), one, atol=1e-12)


def test_flat_spectrum_shares_follow_point_counts():
    K = 500
    grid = frequency_grid(K)
    slices = spectral_gfevd(vma_from_phi(np.zeros((1, 2, 2)), 20), [[1, 0.3], [0.3, 1]], grid)
    raw = band_aggregate(slices, DEFAULT_BANDS)
    masks = band_membership(grid, DEFAULT_BANDS)
    total = sum(raw.values())
    for label, m in raw.items():
        np.testing.assert_allclose(m / total, masks[label].sum() / K, rtol=1e-12)
    assert {k: int(v.sum()) for k, v in masks.items()} == {"short": 400, "medium": 75, "long": 25}


def test_band_membership_errors():
    grid = frequency_grid(500)
    with pytest.raises(ConnectednessError, match="tiny"):
        band_membership(grid, [FrequencyBand("tiny", 0.0, 1e-5), FrequencyBand("rest", 1e-5, math.pi)])
    with pytest.raises(ConnectednessError, match="partition"):
        band_membership(grid, [FrequencyBand("a", 0.0, 2.0), FrequencyBand("b", 1.0, math.pi)])
    with pytest.raises(ConnectednessError):
        FrequencyBand("bad", 2.0, 1.0)


def test_whole_range_reproduces_time_domain():
    sigma = np.array([[1.0, 0.4], [0.4, 2.0]])
    H = 20
    psi = vma_from_phi(PHI_ORACLE, H)
    time = connectedness(psi, sigma, H)
    freq = frequency_connectedness(psi, sigma, [WHOLE_RANGE])["total"]
    np.testing.assert_allclose(freq.theta_tilde, time.theta_tilde, atol=1e-12)
    assert freq.tci == pytest.approx(time.tci, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_additivity_to_time_domain(seed):
    phi, sigma = random_model(np.random.default_rng(seed))
    H = 20
    psi = vma_from_phi(phi, H)
    time = connectedness(psi, sigma, H)
    bands = frequency_connectedness(psi, sigma, DEFAULT_BANDS)
    assert sum(t.tci for t in bands.values()) == pytest.approx(time.tci, abs=1e-10)
    for name in MEASURES:
        np.testing.assert_allclose(sum(getattr(t, name) for t in bands.values()), getattr(time, name), atol=1e-10)
    tilde = sum(t.theta_tilde for t in bands.values())
    np.testing.assert_allclose(tilde.sum(axis=1), 1.0, atol=1e-12)
    assert all(np.all(t.theta_tilde >= 0) for t in bands.values())


def test_band_measures_checks_total():
    psi = vma_from_phi(PHI_ORACLE, 20)
    slices = spectral_gfevd(psi, np.eye(2), frequency_grid(500))
    raw = band_aggregate(slices)
    good = normalize_rows(gfevd(psi, np.eye(2), 20))
    assert set(band_measures(raw, good)) == {"short", "medium", "long"}
    with pytest.raises(ConnectednessError):
        band_measures(raw, np.eye(2))


def test_grid_too_coarse_for_truncation():
    with pytest.raises(ConnectednessError, match="coarse"):
        frequency_connectedness(vma_from_phi(PHI_ORACLE, 100), np.eye(2), grid_points=50)


def test_short_vs_long_dominance():
    sigma = np.array([[1, 0.3, 0.2], [0.3, 1, 0.1], [0.2, 0.1, 1]])
    quick = frequency_connectedness(vma_from_phi(0.05 * np.ones((3, 3)), 20), sigma)
    slow = frequency_connectedness(vma_from_phi(0.9 * np.eye(3) + 0.03 * np.ones((3, 3)), 20), sigma)
    assert quick["short"].tci > quick["medium"].tci + quick["long"].tci
    assert slow["long"].tci > slow["medium"].tci + slow["short"].tci


def test_within_frequency_rows_sum_to_one():
    slices = spectral_gfevd(vma_from_phi(PHI_ORACLE, 20), np.eye(2), frequency_grid(50))
    np.testing.assert_allclose(within_frequency(slices).sum(axis=2), 1.0, atol=1e-12)
