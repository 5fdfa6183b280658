"""Joint trellis over n tracks for a degree-nu target.

A state packs the last nu inputs of every track into one integer, track-major
with the newest bit in the least significant position of its track's field:

    state = sum_t bits_t * 2**(nu*t),   bit m of bits_t <-> x_t[k-m] (+1 -> 1)

Each step consumes one input column u in {-1,+1}^n, so every state has 2^n
incoming and outgoing branches. Branches are stored destination-major:
pred[p, i] lists the predecessors of state p in increasing state order, which
is what the detectors rely on for their deterministic tie-break. The slot
index i equals the bit pattern shifted out of the predecessor, so (p, i)
identifies a branch uniquely.

Sectors are preceded by nu all-(+1) columns, hence the initial state is the
all-ones pattern; the final state is left free and resolved by best-metric
traceback.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import interference_matrix
from .eigen import EigenSystem
from .signal import TargetPolynomial

MAX_STATE_BITS = 24


@dataclass(frozen=True)
class Trellis:
    n: int
    h: TargetPolynomial
    pred: np.ndarray          # (S, B) int32, ascending along axis 1
    branch_input: np.ndarray  # (S, B) uint8, packed input bits of the branch into p
    isi_out: np.ndarray       # (S, B, n) float64, per-track ISI output of the branch

    @property
    def nu(self) -> int:
        return self.h.nu

    @property
    def n_states(self) -> int:
        return self.pred.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.pred.shape[1]

    @property
    def init_state(self) -> int:
        """State fixed by the all-(+1) preamble."""
        return self.n_states - 1


def _bit(value: int, pos: int) -> int:
    return (value >> pos) & 1


def _pm(bit: int) -> float:
    return 1.0 if bit else -1.0


def build_trellis(n: int, h: TargetPolynomial) -> Trellis:
    """Enumerate states and branches for n tracks over target h."""
    if n < 1:
        raise ValueError("need at least one track")
    nu = h.nu
    if n * nu > MAX_STATE_BITS:
        raise ValueError(f"state space 2^{n * nu} exceeds the 2^{MAX_STATE_BITS} cap")
    if n > 8:
        raise ValueError("branch bookkeeping packs input columns into a byte; n must be <= 8")
    S = 1 << (n * nu)
    B = 1 << n
    taps = h.coeffs
    mask = (1 << nu) - 1

    pred = np.empty((S, B), dtype=np.int32)
    binput = np.empty((S, B), dtype=np.uint8)
    isi = np.empty((S, B, n), dtype=np.float64)

    for q in range(S):
        tbits = [(q >> (nu * t)) & mask for t in range(n)]
        for u in range(B):
            p = 0
            slot = 0
            for t in range(n):
                new_bits = ((tbits[t] << 1) | _bit(u, t)) & mask
                p |= new_bits << (nu * t)
                if nu > 0:
                    slot |= _bit(tbits[t], nu - 1) << t
            if nu == 0:
                slot = u
            pred[p, slot] = q
            binput[p, slot] = u
            for t in range(n):
                w = taps[0] * _pm(_bit(u, t))
                for m in range(1, nu + 1):
                    w += taps[m] * _pm(_bit(tbits[t], m - 1))
                isi[p, slot, t] = w
    return Trellis(n=n, h=h, pred=pred, branch_input=binput, isi_out=isi)


@lru_cache(maxsize=32)
def _cached_trellis(n: int, coeffs: tuple[float, ...]) -> Trellis:
    return build_trellis(n, TargetPolynomial(coeffs))


def trellis_for(n: int, h: TargetPolynomial) -> Trellis:
    """Memoized build_trellis; the hot paths reuse one trellis per (n, h)."""
    return _cached_trellis(n, h.coeffs)


def ml_labels(t: Trellis, eps0: float) -> np.ndarray:
    """Branch labels for the joint detector in head coordinates: A_n(eps0) @ w."""
    A = interference_matrix(t.n, eps0)
    return np.einsum("ij,sbj->sbi", A, t.isi_out)


def wssjd_labels(t: Trellis, sys: EigenSystem) -> np.ndarray:
    """Branch labels in eigenchannel coordinates: V^T @ w. Independent of eps."""
    if sys.n != t.n:
        raise ValueError("eigensystem and trellis track counts differ")
    return np.einsum("ji,sbj->sbi", sys.V, t.isi_out)


def unpack_inputs(t: Trellis, packed: np.ndarray) -> np.ndarray:
    """Packed per-step input codes (L,) -> bipolar block (n, L)."""
    packed = np.asarray(packed)
    bits = (packed[None, :] >> np.arange(t.n)[:, None]) & 1
    return bits.astype(np.float64) * 2.0 - 1.0
