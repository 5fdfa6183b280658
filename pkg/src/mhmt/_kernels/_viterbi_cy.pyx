# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Viterbi kernels; semantics match _viterbi_py exactly."""

import numpy as np

cimport cython

DEF BIG = 1e300


cdef void _traceback(const int[:, ::1] pred, const unsigned char[:, ::1] binput,
                     const unsigned char[:, ::1] psi, int end_state,
                     unsigned char[::1] inputs) noexcept nogil:
    cdef Py_ssize_t L = psi.shape[0]
    cdef Py_ssize_t k
    cdef int s = end_state
    cdef unsigned char slot
    for k in range(L - 1, -1, -1):
        slot = psi[k, s]
        inputs[k] = binput[s, slot]
        s = pred[s, slot]


def viterbi_static(const int[:, ::1] pred, const unsigned char[:, ::1] binput,
                   const double[:, :, ::1] labels, const double[::1] weights,
                   const double[:, ::1] obs, int init_state):
    cdef Py_ssize_t S = pred.shape[0]
    cdef Py_ssize_t B = pred.shape[1]
    cdef Py_ssize_t n = labels.shape[2]
    cdef Py_ssize_t L = obs.shape[0]

    M_arr = np.full(S, BIG)
    Mn_arr = np.empty(S)
    psi_arr = np.empty((L, S), dtype=np.uint8)
    inputs_arr = np.empty(L, dtype=np.uint8)
    cdef double[::1] M = M_arr
    cdef double[::1] Mn = Mn_arr
    cdef unsigned char[:, ::1] psi = psi_arr
    cdef unsigned char[::1] inputs = inputs_arr

    cdef Py_ssize_t k, p, i, c
    cdef double best, tot, bm, d
    cdef unsigned char bi
    cdef double[::1] tmp

    M[init_state] = 0.0
    with nogil:
        for k in range(L):
            for p in range(S):
                best = BIG * 2.0
                bi = 0
                for i in range(B):
                    bm = 0.0
                    for c in range(n):
                        d = obs[k, c] - labels[p, i, c]
                        bm += d * d * weights[c]
                    tot = M[pred[p, i]] + bm
                    if tot < best:
                        best = tot
                        bi = <unsigned char> i
                Mn[p] = best
                psi[k, p] = bi
            tmp = M
            M = Mn
            Mn = tmp

    cdef int end = 0
    cdef Py_ssize_t pp
    best = M[0]
    for pp in range(1, S):
        if M[pp] < best:
            best = M[pp]
            end = <int> pp
    _traceback(pred, binput, psi, end, inputs)
    return inputs_arr, float(M[end])


def viterbi_adaptive(const int[:, ::1] pred, const unsigned char[:, ::1] binput,
                     const double[:, :, ::1] labels, const double[:, ::1] raw,
                     const double[::1] g0, double beta, int delay,
                     const unsigned char[::1] active,
                     double clamp_lo, double clamp_hi, int init_state):
    cdef Py_ssize_t S = pred.shape[0]
    cdef Py_ssize_t B = pred.shape[1]
    cdef Py_ssize_t L = raw.shape[0]
    cdef Py_ssize_t n = raw.shape[1]

    M_arr = np.full(S, BIG)
    Mn_arr = np.empty(S)
    psi_arr = np.empty((L, S), dtype=np.uint8)
    inputs_arr = np.empty(L, dtype=np.uint8)
    gains_arr = np.empty((L, n))
    g_arr = np.asarray(g0, dtype=np.float64).copy()
    ring_arr = np.empty((delay + 1, n))
    w_arr = np.empty(n)
    cdef double[::1] M = M_arr
    cdef double[::1] Mn = Mn_arr
    cdef unsigned char[:, ::1] psi = psi_arr
    cdef unsigned char[::1] inputs = inputs_arr
    cdef double[:, ::1] gains = gains_arr
    cdef double[::1] g = g_arr
    cdef double[:, ::1] ring = ring_arr
    cdef double[::1] w = w_arr

    cdef Py_ssize_t k, p, i, c, j, slot_k
    cdef int pstate
    cdef double best, tot, bm, d, y, e, gc
    cdef unsigned char bi
    cdef int n_clamped = 0
    cdef Py_ssize_t ring_len = delay + 1
    cdef double[::1] tmp

    M[init_state] = 0.0
    with nogil:
        for k in range(L):
            for c in range(n):
                ring[k % ring_len, c] = g[c] * raw[k, c]
                w[c] = 1.0 / (g[c] * g[c])
            for p in range(S):
                best = BIG * 2.0
                bi = 0
                for i in range(B):
                    bm = 0.0
                    for c in range(n):
                        d = ring[k % ring_len, c] - labels[p, i, c]
                        bm += d * d * w[c]
                    tot = M[pred[p, i]] + bm
                    if tot < best:
                        best = tot
                        bi = <unsigned char> i
                Mn[p] = best
                psi[k, p] = bi
            tmp = M
            M = Mn
            Mn = tmp
            if k >= delay:
                pstate = 0
                best = M[0]
                for p in range(1, S):
                    if M[p] < best:
                        best = M[p]
                        pstate = <int> p
                for j in range(delay):
                    pstate = pred[pstate, psi[k - j, pstate]]
                slot_k = psi[k - delay, pstate]
                for c in range(n):
                    if active[c]:
                        y = labels[pstate, slot_k, c]
                        e = y - ring[(k - delay) % ring_len, c]
                        gc = g[c] + beta * y * e
                        if gc < clamp_lo:
                            gc = clamp_lo
                            n_clamped += 1
                        elif gc > clamp_hi:
                            gc = clamp_hi
                            n_clamped += 1
                        g[c] = gc
            for c in range(n):
                gains[k, c] = g[c]

    cdef int end = 0
    best = M[0]
    for p in range(1, S):
        if M[p] < best:
            best = M[p]
            end = <int> p
    _traceback(pred, binput, psi, end, inputs)
    return inputs_arr, gains_arr, float(M[end]), n_clamped
