from __future__ import annotations

import numpy as np
import pytest

from mhmt.channel import mix_tracks
from mhmt.detect import wssjd_detect
from mhmt.eigen import toeplitz_eigen
from mhmt.gain import (
    GAIN_CLAMP,
    GainLoop,
    adaptive_wssjd_detect,
    default_delay,
    eps_from_gains,
    gain_step,
    ls_gain_estimate,
)
from mhmt.signal import DICODE, EPR4, convolve_tracks, random_bipolar, sigma_from_snr, substream
from mhmt.trellis import trellis_for


def make_readback(n, h, eps, L, snr_db, seed):
    rng = substream(seed, 0)
    X = random_bipolar(rng, (n, L))
    Xp = np.hstack([np.ones((n, h.nu)), X])
    W = convolve_tracks(Xp, h)
    sigma = sigma_from_snr(snr_db, h) if snr_db is not None else 0.0
    noise = sigma * rng.normal(size=W.shape) if sigma else 0.0
    R = (mix_tracks(W, eps) + noise)[:, h.nu:h.nu + L]
    return X, R


def test_default_delay():
    assert default_delay(1) == 5
    assert default_delay(3) == 13


def test_loop_init_matches_ideal_gains():
    sys = toeplitz_eigen(3)
    loop = GainLoop.for_system(sys, beta=0.01, delay=5, eps_init=0.2)
    np.testing.assert_allclose(loop.g, 1.0 / (1.0 + 0.2 * sys.lambda_hat))


def test_gain_step_replays_lms_arithmetic():
    sys = toeplitz_eigen(2)
    loop = GainLoop.for_system(sys, beta=0.05, delay=5)
    raw = np.array([1.3, -0.4])
    y = np.array([1.41, -0.7])
    stepped = gain_step(loop, raw, y)
    # e = y - g*raw ; g' = g + beta*y*e, written out by hand
    e = y - loop.g * raw
    np.testing.assert_allclose(stepped.g, loop.g + 0.05 * y * e)


def test_gain_step_clamps():
    sys = toeplitz_eigen(2)
    loop = GainLoop.for_system(sys, beta=10.0, delay=5)
    stepped = gain_step(loop, np.array([5.0, -5.0]), np.array([50.0, 50.0]))
    lo, hi = GAIN_CLAMP
    assert np.all(stepped.g >= lo) and np.all(stepped.g <= hi)


def test_gain_step_freezes_zero_eigenvalue_channel():
    sys = toeplitz_eigen(3)  # middle eigenvalue exactly zero
    loop = GainLoop.for_system(sys, beta=0.1, delay=5)
    stepped = gain_step(loop, np.array([2.0, 2.0, 2.0]), np.array([1.0, 1.0, 1.0]))
    assert stepped.g[1] == 1.0
    assert stepped.g[0] != loop.g[0]


def test_eps_from_gains_inverts_ideal_gains():
    for n in (2, 3, 4):
        sys = toeplitz_eigen(n)
        for eps in (0.0, 0.15, 0.5):
            est = eps_from_gains(sys.gains(eps), sys.lambda_hat)
            assert est.combined == pytest.approx(eps, abs=1e-12)
            np.testing.assert_allclose(est.per_loop, eps, atol=1e-12)


def test_adaptive_gains_frozen_before_delay():
    t = trellis_for(2, DICODE)
    sys = toeplitz_eigen(2)
    _, R = make_readback(2, DICODE, 0.3, 100, 10.0, 400)
    delay = 7
    _, trace = adaptive_wssjd_detect(R, t, sys, beta=0.02, delay=delay)
    np.testing.assert_array_equal(trace.gains[:delay], np.ones((delay, 2)))
    assert not np.array_equal(trace.gains[delay], np.ones(2))


def test_adaptive_converges_to_fixed_point():
    # noiseless: e = y(1 - g*lambda) vanishes only at g = 1/lambda, so the
    # loop must settle there from a cold start
    eps = 0.3
    t = trellis_for(2, DICODE)
    sys = toeplitz_eigen(2)
    X, R = make_readback(2, DICODE, eps, 2500, None, 401)
    Xh, trace = adaptive_wssjd_detect(R, t, sys, beta=0.01)
    np.testing.assert_array_equal(Xh, X)
    ideal = 1.0 / (1.0 + eps * sys.lambda_hat)
    np.testing.assert_allclose(trace.final_gains, ideal, atol=2e-3)
    assert float(trace.eps_hat[-1]) == pytest.approx(eps, abs=2e-3)
    assert trace.n_clamped == 0


def test_adaptive_tracks_noisy_channel():
    eps = 0.2
    t = trellis_for(2, DICODE)
    sys = toeplitz_eigen(2)
    X, R = make_readback(2, DICODE, eps, 6000, 10.0, 402)
    Xh, trace = adaptive_wssjd_detect(R, t, sys, beta=0.008)
    tail = trace.eps_hat[-1500:]
    assert abs(float(tail.mean()) - eps) < 0.02
    # estimates wander with noise but stay in a tight band
    assert float(tail.std()) < 0.05


def test_adaptive_middle_channel_stays_unity():
    t = trellis_for(3, DICODE)
    sys = toeplitz_eigen(3)
    _, R = make_readback(3, DICODE, 0.25, 1500, 11.0, 403)
    _, trace = adaptive_wssjd_detect(R, t, sys, beta=0.01)
    np.testing.assert_array_equal(trace.gains[:, 1], np.ones(1500))


def test_beta_zero_with_ideal_gains_equals_static_detector():
    # frozen ideal gains reduce the adaptive pass to the static weighted
    # detector: identical metric, identical decisions
    eps = 0.35
    t = trellis_for(2, DICODE)
    sys = toeplitz_eigen(2)
    X, R = make_readback(2, DICODE, eps, 800, 7.0, 404)
    g0 = 1.0 / (1.0 + eps * sys.lambda_hat)
    Xh, trace = adaptive_wssjd_detect(R, t, sys, beta=0.0, g_init=g0)
    np.testing.assert_array_equal(Xh, wssjd_detect(R, t, sys, eps))
    np.testing.assert_allclose(trace.gains, np.tile(g0, (800, 1)))


def test_adaptive_works_with_epr4():
    eps = 0.25
    t = trellis_for(2, EPR4)
    sys = toeplitz_eigen(2)
    X, R = make_readback(2, EPR4, eps, 3000, None, 405)
    Xh, trace = adaptive_wssjd_detect(R, t, sys, beta=0.01)
    np.testing.assert_array_equal(Xh, X)
    np.testing.assert_allclose(trace.final_gains,
                               1.0 / (1.0 + eps * sys.lambda_hat), atol=5e-3)


def test_ls_gain_estimate_noiseless_is_exact():
    for n, eps in ((2, 0.3), (3, 0.15)):
        sys = toeplitz_eigen(n)
        rng = substream(406, n)
        X = random_bipolar(rng, (n, 256))
        Xp = np.hstack([np.ones((n, 1)), X])
        W = convolve_tracks(Xp, DICODE)[:, 1:257]
        R = mix_tracks(W, eps)
        g = ls_gain_estimate(R, W, sys)
        np.testing.assert_allclose(g, 1.0 / (1.0 + eps * sys.lambda_hat), atol=1e-12)


def test_ls_gain_estimate_matches_lstsq_under_noise():
    sys = toeplitz_eigen(2)
    rng = substream(407, 0)
    X = random_bipolar(rng, (2, 200))
    Xp = np.hstack([np.ones((2, 1)), X])
    W = convolve_tracks(Xp, DICODE)[:, 1:201]
    R = mix_tracks(W, 0.2) + 0.3 * rng.normal(size=W.shape)
    g = ls_gain_estimate(R, W, sys)
    raw = sys.V.T @ R
    y = sys.V.T @ W
    for j in range(2):
        ref = np.linalg.lstsq(raw[j][:, None], y[j], rcond=None)[0][0]
        assert g[j] == pytest.approx(ref, rel=1e-10)


def test_trace_eps_hat_loops_shape():
    t = trellis_for(3, DICODE)
    sys = toeplitz_eigen(3)
    _, R = make_readback(3, DICODE, 0.2, 400, 12.0, 408)
    _, trace = adaptive_wssjd_detect(R, t, sys, beta=0.01)
    per = trace.eps_hat_loops()
    assert per.shape == (400, 2)  # middle loop inactive
    assert trace.eps_hat.shape == (400,)
