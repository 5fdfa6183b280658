"""Monte Carlo experiments: BER sweeps, mismatch sensitivity, gain traces,
and distance tables, with deterministic seeding and CSV output.

Every sector draws its data and noise from a substream keyed by
(seed, point index, sector index), so results are identical no matter how
many workers run or in what order sectors complete. Detectors within a point
share the same sectors and noise, which pairs their error counts and
sharpens comparisons between them.

A sector is `sector_len` trellis steps long; with n tracks it carries
n*sector_len data bits. Each sector is preceded by nu all-(+1) columns that
pin the initial detector state, and those positions are excluded from error
counting.
"""
from __future__ import annotations

import json
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import EPS_MAX, ItiProfile, mix_tracks
from .detect import ml_detect, shst_detect, ssjd_detect, wssjd_detect
from .distance import (
    closed_form_dmin,
    d0_search,
    default_max_len,
    dmin_search,
    mismatch_dmin_search,
)
from .eigen import toeplitz_eigen
from .gain import adaptive_wssjd_detect, default_delay, ls_gain_estimate
from .signal import (
    TargetPolynomial,
    convolve_tracks,
    random_bipolar,
    sigma_from_snr,
    substream,
)
from .trellis import trellis_for

DETECTOR_KINDS = ("ml", "wssjd", "ssjd", "wssjd-adaptive", "shst-conv", "shst-itifree")
_TRAIN_STREAM = 0x0FFFFFFF  # reserved sector index for the training block
_STOP_BATCH = 64            # sectors per early-stop check, fixed for determinism


def resolve_target(spec: str) -> TargetPolynomial:
    """Target from a preset name or 'taps=h0,h1,...'."""
    if spec.startswith("taps="):
        return TargetPolynomial(tuple(float(v) for v in spec[5:].split(",")))
    return TargetPolynomial.from_name(spec)


@dataclass(frozen=True)
class SimConfig:
    detectors: tuple[str, ...] = ("ml",)
    n: int = 2
    target: str = "dicode"
    profile: ItiProfile = field(default_factory=lambda: ItiProfile.static(0.1))
    snr_db: tuple[float, ...] = (10.0,)
    sector_len: int = 4096
    sectors: int = 8
    seed: int = 0
    eps_detector: float | None = None
    delta_eps: float = 0.0
    beta: float = 0.008
    delay: int | None = None
    train_bits: int = 256
    min_errors: int | None = None
    jobs: int = 1

    def __post_init__(self):
        for d in self.detectors:
            if d not in DETECTOR_KINDS:
                raise ValueError(f"unknown detector {d!r}; choose from {DETECTOR_KINDS}")
        if self.sector_len < 1 or self.sectors < 1:
            raise ValueError("sector_len and sectors must be positive")
        lo = self.profile.eps0 - abs(self.profile.amplitude) + min(self.delta_eps, 0)
        hi = self.profile.eps0 + abs(self.profile.amplitude) + max(self.delta_eps, 0)
        if lo < 0.0 or hi > EPS_MAX:
            raise ValueError("profile plus delta_eps leaves the valid interference range")

    @property
    def h(self) -> TargetPolynomial:
        return resolve_target(self.target)

    @property
    def eps0(self) -> float:
        return self.profile.eps0 if self.eps_detector is None else self.eps_detector

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "profile" in d and isinstance(d["profile"], dict):
            d["profile"] = ItiProfile(**d["profile"])
        for key in ("detectors", "snr_db"):
            if key in d and isinstance(d[key], list):
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path: str) -> "SimConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass
class ResultRow:
    detector: str
    snr_db: float
    eps_mode: str
    delta_eps: float
    bits: int
    bit_errors: int
    frames: int
    frame_errors: int
    ber: float
    fer: float
    seed: int
    wall_time: float


RESULT_FIELDS = list(ResultRow.__dataclass_fields__)


def _detect_block(kind, R, R_plain, t, sys, eps0, beta, delay, g_init):
    if kind == "ml":
        return ml_detect(R, t, eps0)
    if kind == "wssjd":
        return wssjd_detect(R, t, sys, eps0)
    if kind == "ssjd":
        return ssjd_detect(R, t, sys, eps0)
    if kind == "wssjd-adaptive":
        x, _ = adaptive_wssjd_detect(R, t, sys, beta=beta, delay=delay, g_init=g_init)
        return x
    if kind == "shst-conv":
        return np.vstack([shst_detect(row, t.h) for row in R])
    if kind == "shst-itifree":
        return np.vstack([shst_detect(row, t.h) for row in R_plain])
    raise ValueError(f"unknown detector {kind!r}")


def _gen_sector(cfg: SimConfig, point_idx: int, sector_idx: int, sigma: float,
                delta: float, want_plain: bool):
    """Data block, interference readback, and (optionally) the no-ITI readback.

    The readback slices returned are aligned with the data columns. Draw
    order per sector is data first, then noise, so detector lists do not
    change the realizations.
    """
    h = cfg.h
    nu = h.nu
    n, N = cfg.n, cfg.sector_len
    rng = substream(cfg.seed, point_idx, sector_idx)
    X = random_bipolar(rng, (n, N))
    Xp = np.hstack([np.ones((n, nu)), X])
    W = convolve_tracks(Xp, h)
    eps = cfg.profile.eps_at(np.arange(W.shape[1]) - nu, N) + delta
    clean = mix_tracks(W, eps)
    Z = rng.normal(size=W.shape)
    R = (clean + sigma * Z)[:, nu:nu + N]
    R_plain = (W + sigma * Z)[:, nu:nu + N] if want_plain else None
    return X, R, R_plain


def _train_gains(cfg: SimConfig, point_idx: int, sigma: float, delta: float):
    """LS gain estimate from one known training block on the live channel."""
    cols = max(cfg.train_bits // cfg.n, cfg.h.nu + 1)
    sub = replace(cfg, sector_len=cols)
    X, R, _ = _gen_sector(sub, point_idx, _TRAIN_STREAM, sigma, delta, False)
    h = cfg.h
    Xp = np.hstack([np.ones((cfg.n, h.nu)), X])
    W = convolve_tracks(Xp, h)[:, h.nu:h.nu + cols]
    return ls_gain_estimate(R, W, toeplitz_eigen(cfg.n))


def _sector_batch(cfg: SimConfig, point_idx: int, sigma: float, delta: float,
                  g_init, sector_indices):
    """Error counts for a batch of sectors: {detector: [bit_errors, frame_errors]}."""
    t = trellis_for(cfg.n, cfg.h)
    sys = toeplitz_eigen(cfg.n)
    delay = default_delay(t.nu) if cfg.delay is None else cfg.delay
    want_plain = "shst-itifree" in cfg.detectors
    counts = {d: [0, 0] for d in cfg.detectors}
    for s in sector_indices:
        X, R, R_plain = _gen_sector(cfg, point_idx, s, sigma, delta, want_plain)
        for kind in cfg.detectors:
            Xh = _detect_block(kind, R, R_plain, t, sys, cfg.eps0, cfg.beta, delay, g_init)
            ne = int(np.count_nonzero(Xh != X))
            counts[kind][0] += ne
            counts[kind][1] += int(ne > 0)
    return counts


def _run_point(cfg: SimConfig, point_idx: int, snr_db: float, delta: float,
               pool) -> list[ResultRow]:
    start = time.perf_counter()
    sigma = sigma_from_snr(snr_db, cfg.h)
    g_init = None
    if "wssjd-adaptive" in cfg.detectors and cfg.train_bits > 0:
        g_init = _train_gains(cfg, point_idx, sigma, delta)

    totals = {d: [0, 0] for d in cfg.detectors}
    done = 0
    while done < cfg.sectors:
        batch = min(_STOP_BATCH, cfg.sectors - done)
        idx = range(done, done + batch)
        if pool is None:
            parts = [_sector_batch(cfg, point_idx, sigma, delta, g_init, idx)]
        else:
            span = max(1, batch // (cfg.jobs * 2))
            chunks = [list(idx)[i:i + span] for i in range(0, batch, span)]
            parts = pool.map(_sector_batch,
                             *zip(*[(cfg, point_idx, sigma, delta, g_init, c) for c in chunks]))
        for part in parts:
            for d, (be, fe) in part.items():
                totals[d][0] += be
                totals[d][1] += fe
        done += batch
        if cfg.min_errors is not None and all(v[0] >= cfg.min_errors for v in totals.values()):
            break

    wall = time.perf_counter() - start
    bits_per_sector = cfg.n * cfg.sector_len
    rows = []
    for d in cfg.detectors:
        be, fe = totals[d]
        bits = done * bits_per_sector
        rows.append(ResultRow(
            detector=d, snr_db=snr_db, eps_mode=cfg.profile.describe(),
            delta_eps=delta, bits=bits, bit_errors=be, frames=done,
            frame_errors=fe, ber=be / bits, fer=fe / done, seed=cfg.seed,
            wall_time=wall,
        ))
    return rows


def _run_points(cfg: SimConfig, points) -> list[ResultRow]:
    rows = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for point_idx, (delta, snr) in enumerate(points):
                rows.extend(_run_point(cfg, point_idx, snr, delta, pool))
    else:
        for point_idx, (delta, snr) in enumerate(points):
            rows.extend(_run_point(cfg, point_idx, snr, delta, None))
    return rows


def run_ber_sweep(cfg: SimConfig) -> list[ResultRow]:
    """BER/FER over the configured SNR grid."""
    return _run_points(cfg, [(cfg.delta_eps, s) for s in cfg.snr_db])


def run_sensitivity_sweep(cfg: SimConfig, deltas) -> list[ResultRow]:
    """BER under detector mismatch: channel at profile + delta, labels at eps0."""
    points = [(float(d), s) for d in deltas for s in cfg.snr_db]
    return _run_points(cfg, points)


def run_gain_trace(cfg: SimConfig, snr_db: float, sector_index: int = 0):
    """One sector's adaptive detection; returns (X, X_hat, GainTrace).

    Gains start at 1 unless cfg.train_bits > 0, in which case a training
    block on the same channel provides the initial estimate.
    """
    sigma = sigma_from_snr(snr_db, cfg.h)
    g_init = None
    if cfg.train_bits > 0:
        g_init = _train_gains(cfg, 0, sigma, cfg.delta_eps)
    t = trellis_for(cfg.n, cfg.h)
    sys = toeplitz_eigen(cfg.n)
    delay = default_delay(t.nu) if cfg.delay is None else cfg.delay
    X, R, _ = _gen_sector(cfg, 0, sector_index, sigma, cfg.delta_eps, False)
    Xh, trace = adaptive_wssjd_detect(R, t, sys, beta=cfg.beta, delay=delay, g_init=g_init)
    return X, Xh, trace


def run_dmin_table(n_list, eps_list, h: TargetPolynomial, deltas=None,
                   max_len: int | None = None, d0_len: int = 6) -> list[dict]:
    """Distance table rows over track counts and interference levels.

    Searched joint minima are emitted for every n; the two-track closed
    forms (flat metric, single-track detectors) and the no-ITI baseline
    accompany them. When `deltas` is given, worst-case mismatch rows are
    added for the two-track channel.
    """
    d0, _ = d0_search(h, d0_len)
    rows = []
    for n in n_list:
        ml_len = default_max_len(n) if max_len is None else max_len
        for eps in eps_list:
            rep = dmin_search(n, eps, h, ml_len)
            rows.append(dict(n=n, eps=eps, delta_eps=0.0, mode="ml",
                             d_min_sq=rep.d_sq, event_class=rep.event_class))
            if n == 2:
                for mode in ("ssjd", "shst-opt", "iti-free"):
                    rows.append(dict(n=n, eps=eps, delta_eps=0.0, mode=mode,
                                     d_min_sq=closed_form_dmin(mode, eps, d0),
                                     event_class=""))
                if h.is_dicode():
                    rows.append(dict(n=n, eps=eps, delta_eps=0.0, mode="shst-conv",
                                     d_min_sq=closed_form_dmin("shst-conv", eps, d0, h),
                                     event_class=""))
                if deltas is not None:
                    for delta in deltas:
                        mrep = mismatch_dmin_search(eps, float(delta), h)
                        rows.append(dict(n=n, eps=eps, delta_eps=float(delta),
                                         mode="ml-mismatch", d_min_sq=mrep.d_sq,
                                         event_class=mrep.event_class))
    return rows


def count_error_events(X: np.ndarray, X_hat: np.ndarray, nu: int):
    """Split detection errors into trellis error events.

    Columns with any wrong track are error positions; positions separated by
    at least nu correct columns belong to distinct events (the paths remerge
    in between). Returns a list of (start, end) column spans, end exclusive.
    """
    bad = np.flatnonzero(np.any(np.asarray(X) != np.asarray(X_hat), axis=0))
    if bad.size == 0:
        return []
    spans = []
    s = p = bad[0]
    for k in bad[1:]:
        if k - p - 1 >= nu:
            spans.append((int(s), int(p) + 1))
            s = k
        p = k
    spans.append((int(s), int(p) + 1))
    return spans


def measure_event_rate(cfg: SimConfig, snr_db: float) -> dict:
    """Observed error-event statistics for the first configured detector.

    Returns counts over cfg.sectors sectors: events, error bits, total bits,
    columns, plus the per-bit and per-column event rates.
    """
    t = trellis_for(cfg.n, cfg.h)
    sys = toeplitz_eigen(cfg.n)
    sigma = sigma_from_snr(snr_db, cfg.h)
    delay = default_delay(t.nu) if cfg.delay is None else cfg.delay
    kind = cfg.detectors[0]
    events = 0
    bit_errors = 0
    singles = doubles = 0
    for s in range(cfg.sectors):
        X, R, _ = _gen_sector(cfg, 0, s, sigma, cfg.delta_eps, False)
        Xh = _detect_block(kind, R, None, t, sys, cfg.eps0, cfg.beta, delay, None)
        bit_errors += int(np.count_nonzero(Xh != X))
        for a, b in count_error_events(X, Xh, t.nu):
            events += 1
            diff = np.any((X != Xh)[:, a:b], axis=1)
            k = int(diff.sum())
            singles += k == 1
            doubles += k == 2
    bits = cfg.sectors * cfg.n * cfg.sector_len
    cols = cfg.sectors * cfg.sector_len
    return dict(events=events, bit_errors=bit_errors, bits=bits, columns=cols,
                singles=singles, doubles=doubles,
                rate_per_bit=events / bits, rate_per_column=events / cols)


def format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_csv(rows, fieldnames, out=None) -> None:
    """CSV with 10-significant-digit floats, LF line endings, UTF-8."""
    def emit(f):
        f.write(",".join(fieldnames) + "\n")
        for r in rows:
            d = r.__dict__ if hasattr(r, "__dict__") else r
            f.write(",".join(format_value(d[k]) for k in fieldnames) + "\n")

    if out is None:
        emit(_sys.stdout)
    else:
        with open(out, "w", encoding="utf-8", newline="") as f:
            emit(f)
