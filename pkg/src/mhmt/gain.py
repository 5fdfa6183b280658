"""LMS gain loops and the adaptive weighted joint detector.

Each eigenchannel j of the interference matrix wants the normalizing gain
g_j = 1/(1 + eps*lambda_hat_j). When eps is unknown or drifts, a per-channel
first-order loop estimates it from tentative Viterbi decisions:

    rhat_j[k] = g_j[k-1] * (V^T R)_j[k]
    e_j[k]    = yhat_j[k] - rhat_j[k]
    g_j[k]    = g_j[k-1] + beta * yhat_j[k] * e_j[k]

where yhat is the branch label on the survivor path at lag `delay`. Channels
with lambda_hat_j = 0 need no normalization (their gain is exactly 1) and
carry no loop. Estimated gains feed back both as observation normalizers and
as branch-metric weights 1/g^2, which keeps the detector matched to the
per-channel noise as the interference level moves.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import viterbi_adaptive
from .eigen import EigenSystem
from .trellis import Trellis, unpack_inputs, wssjd_labels

GAIN_CLAMP = (0.2, 5.0)
ZERO_EIG_TOL = 1e-12


def default_delay(nu: int) -> int:
    """Decision lag for the loops: survivor paths are reliable ~4*nu+1 deep."""
    return 4 * nu + 1


@dataclass(frozen=True)
class GainLoop:
    """State of the per-channel gain loops (functional update style)."""

    lambda_hat: np.ndarray
    beta: float
    delay: int
    g: np.ndarray
    clamp: tuple[float, float] = GAIN_CLAMP

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")

    @classmethod
    def for_system(
        cls,
        sys: EigenSystem,
        beta: float,
        delay: int,
        eps_init: float = 0.0,
        g_init: np.ndarray | None = None,
    ) -> "GainLoop":
        g = sys.gains(eps_init) if g_init is None else np.asarray(g_init, dtype=np.float64).copy()
        return cls(lambda_hat=sys.lambda_hat.copy(), beta=beta, delay=delay, g=g)

    @property
    def active(self) -> np.ndarray:
        return np.abs(self.lambda_hat) > ZERO_EIG_TOL


def gain_step(loop: GainLoop, raw: np.ndarray, tentative: np.ndarray) -> GainLoop:
    """One LMS update from an unnormalized eigenchannel column and its tentative label."""
    raw = np.asarray(raw, dtype=np.float64)
    y = np.asarray(tentative, dtype=np.float64)
    e = y - loop.g * raw
    g = loop.g + loop.beta * y * e
    lo, hi = loop.clamp
    g = np.clip(g, lo, hi)
    g = np.where(loop.active, g, loop.g)
    return GainLoop(lambda_hat=loop.lambda_hat, beta=loop.beta, delay=loop.delay,
                    g=g, clamp=loop.clamp)


@dataclass(frozen=True)
class EpsEstimate:
    per_loop: np.ndarray
    combined: float


def eps_from_gains(g: np.ndarray, lambda_hat: np.ndarray) -> EpsEstimate:
    """Invert g_j = 1/(1 + eps*lambda_hat_j) per active loop and average."""
    g = np.asarray(g, dtype=np.float64)
    lam = np.asarray(lambda_hat, dtype=np.float64)
    act = np.abs(lam) > ZERO_EIG_TOL
    if not np.any(act):
        raise ValueError("no active loops: every coupling eigenvalue is zero")
    per = (1.0 / g[act] - 1.0) / lam[act]
    return EpsEstimate(per_loop=per, combined=float(per.mean()))


@dataclass(frozen=True)
class GainTrace:
    """Per-step loop trajectory of one detected sector."""

    gains: np.ndarray       # (L, n), post-update
    lambda_hat: np.ndarray
    n_clamped: int

    @property
    def eps_hat(self) -> np.ndarray:
        """Combined interference estimate per step (mean over active loops)."""
        act = np.abs(self.lambda_hat) > ZERO_EIG_TOL
        per = (1.0 / self.gains[:, act] - 1.0) / self.lambda_hat[act]
        return per.mean(axis=1)

    def eps_hat_loops(self) -> np.ndarray:
        """(L, n_active) per-loop estimates, loop order = active channel order."""
        act = np.abs(self.lambda_hat) > ZERO_EIG_TOL
        return (1.0 / self.gains[:, act] - 1.0) / self.lambda_hat[act]

    @property
    def final_gains(self) -> np.ndarray:
        return self.gains[-1]

    @property
    def final_eps(self) -> EpsEstimate:
        return eps_from_gains(self.gains[-1], self.lambda_hat)


def adaptive_wssjd_detect(
    R: np.ndarray,
    t: Trellis,
    sys: EigenSystem,
    beta: float = 0.008,
    delay: int | None = None,
    eps_init: float = 0.0,
    g_init: np.ndarray | None = None,
) -> tuple[np.ndarray, GainTrace]:
    """Weighted joint detection with gains learned on the fly.

    Runs one Viterbi pass over R (n, L). At every step the incoming
    eigenchannel column is scaled by the current gains and paths extend under
    weights 1/g^2; once the step index passes `delay`, the globally best
    state is traced back `delay` slots and that branch's label drives the
    LMS update above. Returns the detected block and the full gain trace.

    Gains start at 1/(1 + eps_init*lambda_hat), or at g_init when given
    (e.g. from a training estimate).
    """
    if delay is None:
        delay = default_delay(t.nu)
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    raw = np.ascontiguousarray((sys.V.T @ R).T)
    labels = np.ascontiguousarray(wssjd_labels(t, sys))
    g0 = sys.gains(eps_init) if g_init is None else np.asarray(g_init, dtype=np.float64)
    active = (np.abs(sys.lambda_hat) > ZERO_EIG_TOL).astype(np.uint8)
    lo, hi = GAIN_CLAMP
    packed, gains, _metric, n_clamped = viterbi_adaptive(
        t.pred, t.branch_input, labels, raw, g0, beta, delay, active, lo, hi, t.init_state
    )
    trace = GainTrace(gains=gains, lambda_hat=sys.lambda_hat.copy(), n_clamped=n_clamped)
    return unpack_inputs(t, packed), trace


def ls_gain_estimate(R_train: np.ndarray, W_train: np.ndarray, sys: EigenSystem) -> np.ndarray:
    """Least-squares gains from a known training block.

    W_train holds the per-track ISI outputs of the known data (n, L); the
    fitted gain per channel is <y, raw>/<raw, raw> with y = V^T W and
    raw = V^T R. Channels with a zero coupling eigenvalue keep gain 1.
    """
    raw = sys.V.T @ np.atleast_2d(np.asarray(R_train, dtype=np.float64))
    y = sys.V.T @ np.atleast_2d(np.asarray(W_train, dtype=np.float64))
    denom = (raw * raw).sum(axis=1)
    if np.any(denom <= 0):
        raise ValueError("degenerate training block")
    g = (y * raw).sum(axis=1) / denom
    g = np.clip(g, *GAIN_CLAMP)
    return np.where(np.abs(sys.lambda_hat) > ZERO_EIG_TOL, g, 1.0)
