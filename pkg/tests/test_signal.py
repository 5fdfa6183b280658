from __future__ import annotations

import numpy as np
import pytest

from mhmt.signal import (
    DICODE,
    EPR4,
    TargetPolynomial,
    awgn,
    convolve,
    convolve_tracks,
    random_bipolar,
    sigma_from_snr,
    snr_from_sigma,
    substream,
)


def test_preset_targets():
    assert DICODE.coeffs == (1.0, 1.0)
    assert DICODE.nu == 1
    assert DICODE.norm_sq == 2.0
    assert EPR4.coeffs == (1.0, 1.0, -1.0, -1.0)
    assert EPR4.nu == 3
    assert EPR4.norm_sq == 4.0
    assert TargetPolynomial.from_name("EPR4") == EPR4
    assert DICODE.is_dicode() and not EPR4.is_dicode()


def test_target_validation():
    with pytest.raises(ValueError):
        TargetPolynomial(())
    with pytest.raises(ValueError):
        TargetPolynomial((0.0, 1.0))
    with pytest.raises(ValueError):
        TargetPolynomial((1.0, float("nan")))
    with pytest.raises(ValueError):
        TargetPolynomial.from_name("pr4000")


def test_convolve_matches_polynomial_multiplication():
    # (1 - D + 2D^2)(1 + D) = 1 + 0D + D^2 + 2D^3
    x = np.array([1.0, -1.0, 2.0])
    out = convolve(x, DICODE)
    np.testing.assert_allclose(out, [1.0, 0.0, 1.0, 2.0])


def test_convolve_tracks_shape_and_rows():
    rng = substream(7, 0)
    X = random_bipolar(rng, (3, 20))
    W = convolve_tracks(X, EPR4)
    assert W.shape == (3, 23)
    for i in range(3):
        np.testing.assert_allclose(W[i], np.convolve(X[i], EPR4.as_array()))


def test_output_bound():
    rng = substream(9, 1)
    X = random_bipolar(rng, (2, 500))
    W = convolve_tracks(X, EPR4)
    assert np.all(np.abs(W) <= EPR4.tap_abs_sum + 1e-12)


def test_random_bipolar_values_and_balance():
    rng = substream(1, 2)
    x = random_bipolar(rng, 10000)
    assert set(np.unique(x)) == {-1.0, 1.0}
    # mean of 10k fair signs concentrates near 0
    assert abs(x.mean()) < 0.05


def test_substream_reproducible_and_disjoint():
    a = substream(42, 3, 5).normal(size=8)
    b = substream(42, 3, 5).normal(size=8)
    c = substream(42, 3, 6).normal(size=8)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_awgn_zero_sigma_is_copy():
    y = np.ones((2, 4))
    out = awgn(y, 0.0, substream(0, 0))
    np.testing.assert_array_equal(out, y)
    assert out is not y


def test_awgn_statistics():
    rng = substream(3, 0)
    y = np.zeros(200000)
    z = awgn(y, 0.7, rng)
    assert abs(z.std() - 0.7) < 0.01
    assert abs(z.mean()) < 0.01


def test_snr_definition_round_trip():
    # SNR(dB) = 10 log10(||h||^2 / (2 sigma^2))
    sigma = sigma_from_snr(10.0, DICODE)
    assert sigma == pytest.approx(np.sqrt(2.0 / (2.0 * 10.0)))
    assert snr_from_sigma(sigma, DICODE) == pytest.approx(10.0)
    # EPR4 carries twice the signal energy of dicode
    assert sigma_from_snr(10.0, EPR4) == pytest.approx(np.sqrt(2.0) * sigma)
