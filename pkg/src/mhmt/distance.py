"""Error-event distances, minimum-distance searches, and mismatch analysis.

An error event is an (n, L) array over {0, +2, -2}: the per-track difference
between the transmitted block and a competing path, with the usual
correlation constraint that a nonzero entry pins the transmitted bit to its
sign. The squared distance that controls the pairwise error probability
Q(d/(2 sigma)) depends on the detector:

* joint ML / weighted: d^2 = || A_n(eps) E h ||^2 summed over heads, which in
  eigen coordinates equals sum_j lambda_j^2 ||(V^T E)_j h||^2. The two are
  computed by different routes here and agree to rounding, a useful check.
* unweighted (flat-metric) joint detection: the decision statistic is not the
  likelihood, so the effective distance has the quotient form implemented in
  `event_distance(..., mode="ssjd")` (two tracks).
* detector mismatch: when the true interference level is eps0+delta but the
  labels assume eps0, the argument of Q picks up a data-dependent term; see
  `mismatch_distance`.

Searches enumerate events column by column with branch-and-bound pruning on
the finalized output positions. Reported minima carry one achieving event,
with ties resolved toward the lexicographically smallest trimmed event
(columns compared left to right, tracks within a column top to bottom,
values ordered -2 < 0 < +2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .channel import interference_matrix
from .eigen import toeplitz_eigen
from .signal import TargetPolynomial, convolve_tracks

_TIE_TOL = 1e-12


def default_max_len(n: int) -> int:
    """Event support cap that keeps the search fast at each track count."""
    if n <= 2:
        return 6
    if n == 3:
        return 5
    return 4


def event_class(e: np.ndarray) -> str:
    """single / double / multi by the number of tracks that carry errors."""
    e = np.atleast_2d(e)
    k = int(np.count_nonzero(np.any(e != 0, axis=1)))
    if k <= 1:
        return "single"
    return "double" if k == 2 else "multi"


@dataclass
class DistanceReport:
    d_sq: float
    event: np.ndarray | None
    event_class: str
    x: np.ndarray | None = None
    d_ideal: float | None = None
    d_mism: float | None = None
    complete: bool = True


def _check_event(e: np.ndarray) -> np.ndarray:
    e = np.atleast_2d(np.asarray(e, dtype=np.float64))
    if not np.isin(e, (-2.0, 0.0, 2.0)).all():
        raise ValueError("event entries must be 0 or +-2")
    if not e.any():
        raise ValueError("event must contain at least one error")
    return e


def event_distance(e: np.ndarray, eps: float, h: TargetPolynomial, mode: str = "ml") -> float:
    """Squared distance of one error event under the given detector mode."""
    e = _check_event(e)
    n = e.shape[0]
    out = convolve_tracks(e, h)
    if mode == "ml":
        mixed = interference_matrix(n, eps) @ out
        return float((mixed * mixed).sum())
    if mode == "wssjd":
        sys = toeplitz_eigen(n)
        rot = sys.V.T @ out
        return float((sys.metric_weights(eps)[:, None] * rot * rot).sum())
    if mode == "ssjd":
        if n != 2:
            raise ValueError("flat-metric distance is defined for the two-track channel")
        A, B = out
        s = float((A * A).sum() + (B * B).sum())
        p = float((A * B).sum())
        denom = (1.0 + eps * eps) * s - 4.0 * eps * p
        num = (1.0 + eps) ** 2 * (1.0 - eps) ** 2 * s * s
        return num / denom
    raise ValueError(f"unknown mode {mode!r}")


def closed_form_dmin(kind: str, eps: float, d0_sq: float, h: TargetPolynomial | None = None) -> float:
    """Closed-form minimum squared distances for the two-track channel.

    kind: "ml" (joint, also the weighted detector), "ssjd" (flat metric),
    "shst-opt" (single-track detector with the interference level known),
    "shst-conv" (plain single-track detector; dicode target only),
    "iti-free" (no interference baseline). d0_sq is the single-track
    minimum of the target, e.g. from d0_search.
    """
    if not 0.0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 0.5]")
    if kind == "ml":
        return min(1.0 + eps * eps, 2.0 * (1.0 - eps) ** 2) * d0_sq
    if kind == "ssjd":
        return (1.0 + eps) ** 2 * (1.0 - eps) ** 2 / (1.0 + eps * eps) * d0_sq
    if kind == "shst-opt":
        return (1.0 - eps) ** 2 * d0_sq
    if kind == "shst-conv":
        if h is not None and not h.is_dicode():
            raise ValueError("the conventional single-track form is only exact for the dicode target")
        return (1.0 - 2.0 * eps) ** 2 * d0_sq
    if kind == "iti-free":
        return d0_sq
    raise ValueError(f"unknown kind {kind!r}")


def d0_search(h: TargetPolynomial, max_len: int = 6) -> tuple[float, np.ndarray]:
    """Single-track minimum squared distance of the target, by enumeration.

    Scans events of support up to max_len with the leading entry fixed to +2
    (global sign flips preserve distance). Returns (d0_sq, achieving event).
    """
    if max_len < 1:
        raise ValueError("max_len must be positive")
    taps = h.as_array()
    best = math.inf
    best_event = None
    for length in range(1, max_len + 1):
        for rest in product((-2.0, 0.0, 2.0), repeat=length - 1):
            ev = np.array((2.0,) + rest)
            if length > 1 and ev[-1] == 0.0:
                continue  # shorter support already covered
            out = np.convolve(ev, taps)
            d = float(out @ out)
            if d < best - _TIE_TOL:
                best = d
                best_event = ev
    return best, best_event


def _column_cost_fn(n: int, eps: float, h: TargetPolynomial):
    """Incremental finalized-output cost for the column search.

    Returns cost(hist, col): the mixed squared output at the position where
    `col` is the newest event column and `hist` holds the nu columns before
    it (oldest first, zero-padded at the event start).
    """
    taps = h.coeffs
    nu = h.nu

    def cost(hist: tuple, col: tuple) -> float:
        out = [taps[0] * col[t] for t in range(n)]
        for m in range(1, nu + 1):
            prev = hist[nu - m]
            c = taps[m]
            for t in range(n):
                out[t] += c * prev[t]
        s = 0.0
        for i in range(n):
            y = out[i]
            if i > 0:
                y += eps * out[i - 1]
            if i < n - 1:
                y += eps * out[i + 1]
            s += y * y
        return s

    return cost


def _tail_cost(hist: tuple, cost, nu: int, n: int) -> float:
    """Cost of the nu output positions trailing the final event column."""
    zero = (0.0,) * n
    total = 0.0
    h = hist
    for _ in range(nu):
        total += cost(h, zero)
        h = h[1:] + (zero,)
    return total


def _trim(cols: list[tuple]) -> np.ndarray:
    end = len(cols)
    while end > 1 and not any(cols[end - 1]):
        end -= 1
    return np.array(cols[:end], dtype=np.float64).T


def _event_key(e: np.ndarray) -> tuple:
    return (e.shape[1], tuple(int(v) for v in e.T.ravel()))


def _seed_events(n: int, max_len: int):
    """Modulated alternating events: the families that dominate the minima."""
    for length in range(1, max_len + 1):
        base = np.array([2.0 * (-1) ** j for j in range(length)])
        for signs in product((0.0, 1.0, -1.0), repeat=n):
            if not any(signs):
                continue
            first = next(s for s in signs if s)
            if first < 0:
                continue
            yield np.outer(signs, base)


def dmin_search(
    n: int,
    eps: float,
    h: TargetPolynomial,
    max_len: int | None = None,
    node_budget: int = 5_000_000,
) -> DistanceReport:
    """Minimum joint-detector distance over events of support <= max_len.

    Depth-first search over event columns. A partial event's finalized output
    energy only grows with extension, so any prefix already at or above the
    incumbent is cut. The incumbent starts from the alternating-event families
    rather than +inf, which prunes most of the space immediately. If the node
    budget runs out the best value so far is returned with complete=False.
    """
    if max_len is None:
        max_len = default_max_len(n)
    cost = _column_cost_fn(n, eps, h)
    nu = h.nu
    zero = (0.0,) * n

    best_d = math.inf
    best_event = None
    for ev in _seed_events(n, max_len):
        d = event_distance(ev, eps, h, "ml")
        if d < best_d - _TIE_TOL or (
            d <= best_d + _TIE_TOL and best_event is not None and _event_key(ev) < _event_key(best_event)
        ):
            if d < best_d:
                best_d = d
            best_event = ev

    all_cols = list(product((-2.0, 0.0, 2.0), repeat=n))
    first_cols = [c for c in all_cols if any(c) and next(v for v in c if v) > 0]

    nodes = 0
    complete = True

    def rec(hist: tuple, depth: int, partial: float, cols: list):
        nonlocal best_d, best_event, nodes, complete
        choices = first_cols if depth == 0 else all_cols
        for col in choices:
            nodes += 1
            if nodes > node_budget:
                complete = False
                return
            p = partial + cost(hist, col)
            if p > best_d + _TIE_TOL:
                continue
            cols.append(col)
            new_hist = hist[1:] + (col,) if nu > 0 else hist
            total = p + _tail_cost(new_hist, cost, nu, n)
            if total < best_d - _TIE_TOL:
                best_d = total
                best_event = _trim(cols)
            elif total <= best_d + _TIE_TOL:
                cand = _trim(cols)
                if best_event is None or _event_key(cand) < _event_key(best_event):
                    best_event = cand
            if depth + 1 < max_len:
                rec(new_hist, depth + 1, p, cols)
            cols.pop()
            if not complete:
                return

    rec((zero,) * nu if nu > 0 else (), 0, 0.0, [])
    return DistanceReport(
        d_sq=best_d,
        event=best_event,
        event_class=event_class(best_event),
        complete=complete,
    )


def predicted_pe(d_min: float, sigma: float) -> float:
    """Leading-order error-event probability Q(d_min / (2 sigma))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 0.5 * math.erfc(d_min / (2.0 * sigma * math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# Detector mismatch (two tracks): labels at eps0, channel at eps0 + delta_eps.
# ---------------------------------------------------------------------------

def mismatch_distance(
    e: np.ndarray,
    x: np.ndarray,
    eps0: float,
    delta_eps: float,
    h: TargetPolynomial,
) -> DistanceReport:
    """Effective distance of an event/data pair under a mismatched detector.

    e is (2, L); x is (2, L + 2 nu) and covers the window from nu positions
    before the event to nu after, which is every position whose bit can
    influence the result. The correlation constraint x = e/2 on the support
    is enforced. The error probability of this pair is
    Q((d_ideal + d_mism)/(2 sigma)); the report carries both terms and the
    signed total squared.
    """
    e = _check_event(e)
    if e.shape[0] != 2:
        raise ValueError("mismatch analysis covers the two-track channel")
    nu = h.nu
    L = e.shape[1]
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape != (2, L + 2 * nu):
        raise ValueError(f"x must have shape (2, {L + 2 * nu}) covering the ISI window")
    if not np.isin(x, (-1.0, 1.0)).all():
        raise ValueError("x entries must be +-1")
    support = e != 0
    if not np.array_equal(x[:, nu:nu + L][support], e[support] / 2.0):
        raise ValueError("x violates the correlation constraint on the event support")

    out = convolve_tracks(e, h)
    Arow = out[0] + eps0 * out[1]
    Brow = out[1] + eps0 * out[0]
    d_ideal_sq = float((Arow * Arow).sum() + (Brow * Brow).sum())
    d_ideal = math.sqrt(d_ideal_sq)

    xconv = convolve_tracks(x, h)
    # (x h) at event position p sits at index p + nu of the window convolution
    xa = xconv[0, nu:nu + L + nu]
    xb = xconv[1, nu:nu + L + nu]
    bracket = float(Arow @ xb + Brow @ xa)
    d_mism = 2.0 * delta_eps * bracket / d_ideal
    total = d_ideal + d_mism
    return DistanceReport(
        d_sq=total * total if total >= 0 else -(total * total),
        event=e,
        event_class=event_class(e),
        x=x,
        d_ideal=d_ideal,
        d_mism=d_mism,
    )


def _enumerate_events_2tr(length: int) -> np.ndarray:
    """(E, 2, length) over {0,+-2}: first column nonzero, last column nonzero,
    first nonzero entry positive (global sign symmetry)."""
    cols = np.array(list(product((0.0, 2.0, -2.0), repeat=2)))
    idx = np.array(list(product(range(len(cols)), repeat=length)))
    ev = cols[idx]                      # (E, length, 2)
    ev = np.swapaxes(ev, 1, 2)          # (E, 2, length)
    keep = np.any(ev[:, :, 0] != 0, axis=1)
    if length > 1:
        keep &= np.any(ev[:, :, -1] != 0, axis=1)
    ev = ev[keep]
    flat = np.swapaxes(ev, 1, 2).reshape(ev.shape[0], -1)  # column-major flatten
    first_nz = flat[np.arange(len(flat)), np.argmax(flat != 0, axis=1)]
    return ev[first_nz > 0]


def mismatch_dmin_search(
    eps0: float,
    delta_eps: float,
    h: TargetPolynomial,
    max_len: int = 5,
) -> DistanceReport:
    """Worst-case mismatch distance over events and data patterns.

    For a fixed event the bracket term is linear in every data bit, and bits
    outside the ISI window of the event cannot contribute, so the adversarial
    x is found per position by sign: forced bits come from the correlation
    constraint, each free bit contributes -|coef| (delta_eps > 0) or +|coef|
    (delta_eps < 0). Events are enumerated exhaustively up to max_len.
    Minimizing the signed total d_ideal + d_mism minimizes Q's argument.
    """
    taps = h.as_array()
    nu = h.nu
    best = None  # (signed_total, event, x)

    for length in range(1, max_len + 1):
        ev = _enumerate_events_2tr(length)
        if ev.size == 0:
            continue
        E = ev.shape[0]
        P = length + nu
        W = length + 2 * nu
        conv = np.zeros((E, 2, P))
        for m, c in enumerate(taps):
            conv[:, :, m:m + length] += c * ev
        Arow = conv[:, 0] + eps0 * conv[:, 1]
        Brow = conv[:, 1] + eps0 * conv[:, 0]
        d_ideal = np.sqrt((Arow * Arow).sum(axis=1) + (Brow * Brow).sum(axis=1))

        # coef[k] = sum_m taps[m] * row[k - nu + m] over the window (length W)
        alpha = np.zeros((E, W))   # multiplies x_b
        betac = np.zeros((E, W))   # multiplies x_a
        rt = taps[::-1]
        for j, c in enumerate(rt):
            alpha[:, j:j + P] += c * Arow
            betac[:, j:j + P] += c * Brow

        forced = np.zeros((E, 2, W), dtype=bool)
        forced[:, :, nu:nu + length] = ev != 0
        xval = np.zeros((E, 2, W))
        xval[:, :, nu:nu + length] = ev / 2.0

        fixed = (xval[:, 1] * alpha).sum(axis=1) + (xval[:, 0] * betac).sum(axis=1)
        free_abs = (np.abs(alpha) * ~forced[:, 1]).sum(axis=1) + (np.abs(betac) * ~forced[:, 0]).sum(axis=1)

        if delta_eps > 0:
            bracket = fixed - free_abs
        elif delta_eps < 0:
            bracket = fixed + free_abs
        else:
            bracket = fixed * 0.0
        total = d_ideal + 2.0 * delta_eps * bracket / d_ideal

        i = int(np.argmin(total))
        if best is None or total[i] < best[0] - _TIE_TOL:
            want = -1.0 if delta_eps > 0 else 1.0
            x = np.where(forced[i], xval[i], 0.0)
            coefs = np.stack([betac[i], alpha[i]])
            sgn = np.sign(coefs)
            sgn[sgn == 0] = 1.0
            x = np.where(forced[i], x, want * sgn)
            best = (float(total[i]), ev[i], x)

    signed, e_best, x_best = best
    rep = mismatch_distance(e_best, x_best, eps0, delta_eps, h)
    return rep
