"""Eigenstructure of the interference matrix and the decoupled channel view.

A_n(eps) = I + eps*T where T is the neighbour coupling matrix. T is a
symmetric tridiagonal Toeplitz matrix, so its eigensystem is known in closed
form and does not depend on eps:

    lambda_hat_k = 2*cos(k*pi/(n+1)),  v_jk = sqrt(2/(n+1))*sin(j*k*pi/(n+1))

for j, k = 1..n. Rotating the readback by V^T and dividing channel k by
1 + eps*lambda_hat_k yields n decoupled target channels whose inputs are the
rotated track inputs and whose noise is white with variance sigma^2/lambda_k^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .channel import _check_eps


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenvectors V and coupling eigenvalues lambda_hat for n tracks."""

    n: int
    V: np.ndarray
    lambda_hat: np.ndarray

    def lambdas(self, eps: float) -> np.ndarray:
        """Eigenvalues of A_n(eps): 1 + eps*lambda_hat."""
        _check_eps(eps)
        return 1.0 + eps * self.lambda_hat

    def metric_weights(self, eps: float) -> np.ndarray:
        """Per-channel branch metric weights lambda_k^2 for the weighted detector."""
        lam = self.lambdas(eps)
        return lam * lam

    def gains(self, eps: float) -> np.ndarray:
        """Normalizing gains 1/(1 + eps*lambda_hat) matched to interference level eps."""
        return 1.0 / self.lambdas(eps)


def toeplitz_eigen(n: int) -> EigenSystem:
    """Closed-form eigensystem of the n-track coupling matrix."""
    if n < 1:
        raise ValueError("need at least one track")
    k = np.arange(1, n + 1)
    lam_hat = 2.0 * np.cos(k * np.pi / (n + 1))
    j = k[:, None]
    V = np.sqrt(2.0 / (n + 1)) * np.sin(j * k[None, :] * np.pi / (n + 1))
    # cos/sin at multiples of pi/2 are exact zeros analytically; snap the
    # float dust so zero-eigenvalue channels are recognized exactly
    lam_hat[np.abs(lam_hat) < 1e-12] = 0.0
    V[np.abs(V) < 1e-12] = 0.0
    return EigenSystem(n=n, V=V, lambda_hat=lam_hat)


def transform_inputs(X: np.ndarray, sys: EigenSystem) -> np.ndarray:
    """Rotate track inputs into eigenchannel inputs: V^T @ X."""
    return sys.V.T @ np.atleast_2d(np.asarray(X, dtype=np.float64))


def transform_outputs(R: np.ndarray, sys: EigenSystem, eps0: float) -> np.ndarray:
    """Rotate and normalize readback columns: diag(1/lambda) @ V^T @ R.

    Requires every eigenvalue of A_n(eps0) to be nonzero; with eps0 <= 0.5
    they always are, but the guard keeps a clear error if that precondition
    is ever relaxed.
    """
    lam = sys.lambdas(eps0)
    if np.any(np.abs(lam) < 1e-9):
        raise ValueError("singular interference matrix: zero eigenvalue")
    return (sys.V.T @ np.atleast_2d(np.asarray(R, dtype=np.float64))) / lam[:, None]


def channel_alphabet(sys: EigenSystem, j: int) -> np.ndarray:
    """Sorted input alphabet of eigenchannel j (0-based): {sum_i V[i,j]*x_i}."""
    if not 0 <= j < sys.n:
        raise ValueError("channel index out of range")
    col = sys.V[:, j]
    vals = sorted({round(float(np.dot(col, x)), 12) + 0.0 for x in product((-1.0, 1.0), repeat=sys.n)})
    return np.asarray(vals)
