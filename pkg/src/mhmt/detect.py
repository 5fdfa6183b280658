"""Trellis detectors for the n-track interference channel.

All detectors consume a readback block R of shape (n, L) whose columns are
aligned with the unknown data columns (the caller strips the nu preamble
samples), start from the all-(+1) preamble state, and release the best
end-state path. Ties fall to the smaller predecessor state, then to the
smaller end state, so results are reproducible bit for bit.

Four joint flavours are provided:

* ml_detect       - branch labels A_n(eps0) @ w in head coordinates, unit
                    weights. Exact ML for matched eps0.
* wssjd_detect    - eigenchannel observations with matched normalization and
                    branch weights lambda_k^2. Equivalent to ML, but the
                    trellis labels no longer depend on eps0, which is what
                    makes the adaptive variant in `gain` possible.
* ssjd_detect     - same normalized observations with flat weights; cheaper
                    conceptually but mismatched to the noise, so it gives up
                    distance on the weakest eigenchannel.
* shst_detect     - single-track Viterbi that ignores interference entirely.
"""
from __future__ import annotations

import numpy as np

from ._kernels import viterbi_static
from .channel import interference_matrix
from .eigen import EigenSystem, transform_outputs
from .signal import TargetPolynomial, convolve_tracks
from .trellis import Trellis, ml_labels, trellis_for, unpack_inputs, wssjd_labels


def viterbi(
    t: Trellis,
    labels: np.ndarray,
    weights: np.ndarray,
    obs: np.ndarray,
    init_state: int | None = None,
) -> tuple[np.ndarray, float]:
    """Weighted Viterbi pass over observations (n, L); returns (block (n, L), metric)."""
    obs = np.ascontiguousarray(np.atleast_2d(np.asarray(obs, dtype=np.float64)).T)
    if obs.shape[1] != t.n:
        raise ValueError(f"expected {t.n} observation channels, got {obs.shape[1]}")
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if init_state is None:
        init_state = t.init_state
    packed, metric = viterbi_static(t.pred, t.branch_input, labels, weights, obs, init_state)
    return unpack_inputs(t, packed), metric


def ml_detect(R: np.ndarray, t: Trellis, eps0: float) -> np.ndarray:
    """Joint ML detection with interference level eps0 baked into the labels."""
    labels = ml_labels(t, eps0)
    x, _ = viterbi(t, labels, np.ones(t.n), R)
    return x


def wssjd_detect(R: np.ndarray, t: Trellis, sys: EigenSystem, eps0: float) -> np.ndarray:
    """Weighted detection in eigenchannel coordinates; ML-equivalent for matched eps0."""
    obs = transform_outputs(R, sys, eps0)
    labels = wssjd_labels(t, sys)
    x, _ = viterbi(t, labels, sys.metric_weights(eps0), obs)
    return x


def ssjd_detect(R: np.ndarray, t: Trellis, sys: EigenSystem, eps0: float) -> np.ndarray:
    """Unweighted detection on the normalized eigenchannels."""
    obs = transform_outputs(R, sys, eps0)
    labels = wssjd_labels(t, sys)
    x, _ = viterbi(t, labels, np.ones(t.n), obs)
    return x


def shst_detect(r: np.ndarray, h: TargetPolynomial) -> np.ndarray:
    """Single-head single-track Viterbi on one readback waveform of length L."""
    r = np.asarray(r, dtype=np.float64).reshape(1, -1)
    t = trellis_for(1, h)
    x, _ = viterbi(t, t.isi_out, np.ones(1), r)
    return x


def path_isi_outputs(X: np.ndarray, h: TargetPolynomial) -> np.ndarray:
    """Noiseless per-track ISI outputs for data block X behind a +1 preamble.

    Returns (n, L) aligned with the data columns, matching what the trellis
    labels produce along the path that carries X.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n, L = X.shape
    padded = np.hstack([np.ones((n, h.nu)), X])
    return convolve_tracks(padded, h)[:, h.nu:h.nu + L]


def ml_path_metric(R: np.ndarray, X: np.ndarray, h: TargetPolynomial, eps0: float) -> float:
    """ML objective of a specific candidate block: ||R - A_n(eps0) X h||^2."""
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    W = path_isi_outputs(X, h)
    Y = interference_matrix(R.shape[0], eps0) @ W
    d = R - Y
    return float((d * d).sum())
