"""Numpy reference implementation of the Viterbi kernels.

Mirrors the compiled extension exactly, including arithmetic order and the
tie-break toward the smaller predecessor state (argmin picks the first
minimum and pred rows are sorted ascending).
"""
from __future__ import annotations

import numpy as np

BIG = 1e300


def _traceback(pred, binput, psi, end_state):
    L = psi.shape[0]
    inputs = np.empty(L, dtype=np.uint8)
    s = end_state
    for k in range(L - 1, -1, -1):
        slot = psi[k, s]
        inputs[k] = binput[s, slot]
        s = pred[s, slot]
    return inputs


def viterbi_static(pred, binput, labels, weights, obs, init_state):
    """Fixed-weight Viterbi pass.

    pred (S,B) int32, binput (S,B) uint8, labels (S,B,n) float64,
    weights (n,) float64, obs (L,n) float64. Returns (inputs uint8 (L,),
    final metric).
    """
    S, B = pred.shape
    L = obs.shape[0]
    M = np.full(S, BIG)
    M[init_state] = 0.0
    psi = np.empty((L, S), dtype=np.uint8)
    rows = np.arange(S)
    for k in range(L):
        diff = obs[k] - labels
        bm = (diff * diff * weights).sum(axis=2)
        cand = M[pred] + bm
        choice = np.argmin(cand, axis=1)
        M = cand[rows, choice]
        psi[k] = choice
    end = int(np.argmin(M))
    return _traceback(pred, binput, psi, end), float(M[end])


def viterbi_adaptive(pred, binput, labels, raw, g0, beta, delay, active,
                     clamp_lo, clamp_hi, init_state):
    """Gain-loop Viterbi pass on eigenchannel observations.

    raw (L,n) holds unnormalized eigenchannel samples (V^T R columns). Each
    step scales them by the current per-channel gains, extends paths with
    weights 1/g^2, and once the survivor depth exceeds `delay` nudges the
    gains with an LMS step on the tentative decision at lag `delay`. Gains
    are clamped to [clamp_lo, clamp_hi]; clamp hits are counted, not fatal.

    Returns (inputs uint8 (L,), gains float64 (L,n) post-update per step,
    final metric, clamp count).
    """
    S, B = pred.shape
    L, n = raw.shape
    M = np.full(S, BIG)
    M[init_state] = 0.0
    psi = np.empty((L, S), dtype=np.uint8)
    rows = np.arange(S)
    g = g0.astype(np.float64).copy()
    gains = np.empty((L, n))
    ring = np.empty((delay + 1, n))
    n_clamped = 0
    for k in range(L):
        rb = g * raw[k]
        ring[k % (delay + 1)] = rb
        w = 1.0 / (g * g)
        diff = rb - labels
        bm = (diff * diff * w).sum(axis=2)
        cand = M[pred] + bm
        choice = np.argmin(cand, axis=1)
        M = cand[rows, choice]
        psi[k] = choice
        if k >= delay:
            p = int(np.argmin(M))
            for j in range(delay):
                p = pred[p, psi[k - j, p]]
            slot = psi[k - delay, p]
            y = labels[p, slot]
            e = y - ring[(k - delay) % (delay + 1)]
            for c in range(n):
                if active[c]:
                    gc = g[c] + beta * y[c] * e[c]
                    if gc < clamp_lo:
                        gc = clamp_lo
                        n_clamped += 1
                    elif gc > clamp_hi:
                        gc = clamp_hi
                        n_clamped += 1
                    g[c] = gc
        gains[k] = g
    end = int(np.argmin(M))
    return _traceback(pred, binput, psi, end), gains, float(M[end]), n_clamped
