"""Sequences, partial-response targets, SNR conversion, and noise streams.

Bipolar sequences are plain numpy arrays with values in {-1.0, +1.0}; blocks
of n parallel tracks are arrays of shape (n, N) with one row per track. Real
valued waveforms are float64 arrays throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PRESET_TAPS = {
    "dicode": (1.0, 1.0),
    "epr4": (1.0, 1.0, -1.0, -1.0),
}


@dataclass(frozen=True)
class TargetPolynomial:
    """Partial-response target h(D) = h_0 + h_1 D + ... + h_nu D^nu."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        taps = tuple(float(c) for c in self.coeffs)
        if len(taps) == 0:
            raise ValueError("target needs at least one tap")
        if not all(math.isfinite(c) for c in taps):
            raise ValueError("target taps must be finite")
        if taps[0] == 0.0:
            raise ValueError("leading tap h_0 must be nonzero")
        object.__setattr__(self, "coeffs", taps)

    @classmethod
    def from_name(cls, name: str) -> "TargetPolynomial":
        try:
            return cls(_PRESET_TAPS[name.lower()])
        except KeyError:
            raise ValueError(f"unknown target {name!r}; presets: {sorted(_PRESET_TAPS)}") from None

    @property
    def nu(self) -> int:
        """ISI memory length (polynomial degree)."""
        return len(self.coeffs) - 1

    @property
    def norm_sq(self) -> float:
        return float(sum(c * c for c in self.coeffs))

    @property
    def tap_abs_sum(self) -> float:
        """Sum of tap magnitudes; bounds any noiseless output sample by +-tap_abs_sum."""
        return float(sum(abs(c) for c in self.coeffs))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)

    def is_dicode(self) -> bool:
        return self.coeffs == (1.0, 1.0)


DICODE = TargetPolynomial.from_name("dicode")
EPR4 = TargetPolynomial.from_name("epr4")


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN level plus the master seed that all substreams derive from."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent random stream for (seed, key...).

    Streams are derived by seed-sequence spawning, so any (seed, key) pair maps
    to the same generator no matter how many other streams exist or which
    worker asks for it. That keeps parallel sweeps reproducible.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def random_bipolar(rng: np.random.Generator, shape) -> np.ndarray:
    """Equiprobable +-1 array of the given shape."""
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def convolve(x: np.ndarray, h: TargetPolynomial) -> np.ndarray:
    """Full convolution of one sequence with the target; output length len(x)+nu."""
    return np.convolve(np.asarray(x, dtype=np.float64), h.as_array())


def convolve_tracks(X: np.ndarray, h: TargetPolynomial) -> np.ndarray:
    """Per-track convolution of an (n, N) block; returns (n, N+nu)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    taps = h.as_array()
    return np.stack([np.convolve(row, taps) for row in X])


def awgn(y: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add white Gaussian noise of standard deviation sigma, i.i.d. per sample."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    y = np.asarray(y, dtype=np.float64)
    if sigma == 0.0:
        return y.copy()
    return y + rng.normal(0.0, sigma, size=y.shape)


def sigma_from_snr(snr_db: float, h: TargetPolynomial) -> float:
    """Noise sigma for a per-track SNR of 10*log10(||h||^2 / (2 sigma^2)) dB."""
    return math.sqrt(h.norm_sq / (2.0 * 10.0 ** (snr_db / 10.0)))


def snr_from_sigma(sigma: float, h: TargetPolynomial) -> float:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 10.0 * math.log10(h.norm_sq / (2.0 * sigma * sigma))
