"""The n-track interference channel.

Each head reads its own track through the target h(D) plus a fraction eps of
the two neighbouring tracks. Per output position k the readback column is
A_n(eps_k) @ w_k, where w_k stacks the per-track ISI outputs and A_n is the
tridiagonal mixing matrix with unit diagonal and eps off the diagonal. The
interference level may vary along the sector (spatially varying ITI).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import TargetPolynomial, convolve_tracks

EPS_MAX = 0.5


def coupling_matrix(n: int) -> np.ndarray:
    """Neighbour-pick matrix: ones on the first off-diagonals, zero elsewhere."""
    if n < 1:
        raise ValueError("need at least one track")
    T = np.zeros((n, n))
    idx = np.arange(n - 1)
    T[idx, idx + 1] = 1.0
    T[idx + 1, idx] = 1.0
    return T


def interference_matrix(n: int, eps: float) -> np.ndarray:
    """A_n(eps) = I + eps * coupling_matrix(n)."""
    _check_eps(eps)
    return np.eye(n) + eps * coupling_matrix(n)


def _check_eps(eps) -> None:
    e = np.asarray(eps, dtype=np.float64)
    if np.any(e < 0.0) or np.any(e > EPS_MAX):
        raise ValueError(f"interference level must lie in [0, {EPS_MAX}]")


@dataclass(frozen=True)
class ItiProfile:
    """Interference level along a sector.

    kind "static" keeps eps0 everywhere. kind "sin" follows
    eps0 + amplitude * sin(2*pi*cycles*k/N) over data positions k of a
    length-N sector; positions before the data (preamble) and in the
    convolution tail evaluate the same expression outside [0, N).
    """

    kind: str = "static"
    eps0: float = 0.1
    amplitude: float = 0.0
    cycles: float = 2.0

    def __post_init__(self):
        if self.kind not in ("static", "sin"):
            raise ValueError("profile kind must be 'static' or 'sin'")
        if self.kind == "static" and self.amplitude != 0.0:
            raise ValueError("static profile cannot carry an amplitude")
        lo = self.eps0 - abs(self.amplitude)
        hi = self.eps0 + abs(self.amplitude)
        if lo < 0.0 or hi > EPS_MAX:
            raise ValueError(f"profile range [{lo}, {hi}] leaves [0, {EPS_MAX}]")

    @classmethod
    def static(cls, eps0: float) -> "ItiProfile":
        return cls("static", eps0, 0.0)

    @classmethod
    def sinusoidal(cls, eps0: float, amplitude: float = 0.1, cycles: float = 2.0) -> "ItiProfile":
        return cls("sin", eps0, amplitude, cycles)

    def eps_at(self, k, sector_len: int):
        """Interference level at data position(s) k of a length sector_len sector."""
        k = np.asarray(k, dtype=np.float64)
        if self.kind == "static":
            return np.broadcast_to(np.float64(self.eps0), k.shape).copy()
        return self.eps0 + self.amplitude * np.sin(2.0 * np.pi * self.cycles * k / sector_len)

    def describe(self) -> str:
        if self.kind == "static":
            return f"static:{self.eps0:g}"
        return f"sin:{self.eps0:g}:{self.amplitude:g}:{self.cycles:g}"


def mix_tracks(W: np.ndarray, eps) -> np.ndarray:
    """Apply A_n(eps_k) column by column to per-track ISI outputs W (n, L).

    eps may be a scalar or a length-L vector (one level per output position).
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    _check_eps(eps)
    e = np.broadcast_to(np.asarray(eps, dtype=np.float64), (W.shape[1],))
    Y = W.copy()
    if W.shape[0] > 1:
        Y[:-1] += e * W[1:]
        Y[1:] += e * W[:-1]
    return Y


def noiseless_readback(X: np.ndarray, h: TargetPolynomial, eps) -> np.ndarray:
    """Readback block for input X (n, N): per-track ISI then neighbour mixing.

    Returns (n, N+nu); samples outside the input support treat x as zero.
    eps is a scalar or a per-output-position vector of length N+nu.
    """
    return mix_tracks(convolve_tracks(X, h), eps)


def readback(
    X: np.ndarray,
    h: TargetPolynomial,
    profile: ItiProfile,
    sigma: float,
    rng: np.random.Generator,
    sector_len: int | None = None,
    start: int = 0,
) -> np.ndarray:
    """Noisy readback with the profile evaluated per output position.

    Output position k takes interference level profile.eps_at(start + k, sector_len),
    so a caller that prepends a preamble can shift the profile to keep data
    positions aligned with k = 0..N-1. sector_len defaults to the block length.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n_out = X.shape[1] + h.nu
    if sector_len is None:
        sector_len = X.shape[1]
    eps = profile.eps_at(np.arange(n_out) + start, sector_len)
    clean = noiseless_readback(X, h, eps)
    if sigma == 0.0:
        return clean
    return clean + rng.normal(0.0, sigma, size=clean.shape)
