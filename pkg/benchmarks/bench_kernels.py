"""Compare the compiled Viterbi kernel against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [--sector-len 4096] [--repeats 3]

Times the static and adaptive kernels on the two workloads that dominate
simulation runtime: two tracks with the dicode target (16 states visited as
4 states x 4 branches) and three tracks with the EPR4 target (512 states x
8 branches). Both backends run the same inputs and must produce identical
decisions; the script checks that before printing timings.
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from mhmt import _kernels
from mhmt._kernels import _viterbi_py
from mhmt.channel import mix_tracks
from mhmt.eigen import toeplitz_eigen
from mhmt.gain import default_delay
from mhmt.signal import TargetPolynomial, convolve_tracks, sigma_from_snr, substream
from mhmt.trellis import ml_labels, trellis_for, wssjd_labels


def make_case(n, target_name, sector_len, eps, snr_db, seed):
    h = TargetPolynomial.from_name(target_name)
    t = trellis_for(n, h)
    rng = substream(seed, 0, 0)
    X = rng.integers(0, 2, size=(n, sector_len)) * 2.0 - 1.0
    Xp = np.hstack([np.ones((n, t.nu)), X])
    W = convolve_tracks(Xp, h)
    sigma = sigma_from_snr(snr_db, h)
    R = (mix_tracks(W, eps) + sigma * rng.normal(size=W.shape))[:, t.nu:t.nu + sector_len]
    return t, R, eps


def run_static(backend, t, R, eps):
    labels = ml_labels(t, eps)
    obs = np.ascontiguousarray(R.T)
    w = np.ones(t.n)
    return backend.viterbi_static(t.pred, t.branch_input, labels, w, obs, t.init_state)


def run_adaptive(backend, t, R, eps):
    sys = toeplitz_eigen(t.n)
    labels = wssjd_labels(t, sys)
    raw = np.ascontiguousarray((sys.V.T @ R).T)
    g0 = np.ones(t.n)
    active = (np.abs(sys.lambda_hat) > 1e-12).astype(np.uint8)
    return backend.viterbi_adaptive(t.pred, t.branch_input, labels, raw, g0,
                                    0.008, default_delay(t.nu), active,
                                    0.2, 5.0, t.init_state)


def best_time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sector-len", type=int, default=4096)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = [("numpy", _viterbi_py)]
    if _kernels.BACKEND == "cython":
        backends.append(("cython", importlib.import_module("mhmt._kernels._viterbi_cy")))
    else:
        print("compiled kernel not available; timing the numpy fallback only")

    cases = [
        ("2 tracks, dicode", make_case(2, "dicode", args.sector_len, 0.2, 10.0, 1)),
        ("3 tracks, epr4", make_case(3, "epr4", args.sector_len, 0.2, 10.0, 2)),
    ]
    for label, (t, R, eps) in cases:
        steps = R.shape[1]
        print(f"\n{label}: {t.n_states} states x {t.n_inputs} branches, {steps} steps")
        for mode, runner in (("static", run_static), ("adaptive", run_adaptive)):
            results = {}
            for name, mod in backends:
                dt, out = best_time(lambda m=mod: runner(m, t, R, eps), args.repeats)
                results[name] = (dt, out[0])
                print(f"  {mode:9s} {name:7s} {dt * 1e3:9.2f} ms   "
                      f"{steps / dt / 1e6:6.2f} Msteps/s")
            if len(results) == 2:
                same = np.array_equal(results["numpy"][1], results["cython"][1])
                ratio = results["numpy"][0] / results["cython"][0]
                print(f"  {mode:9s} decisions identical: {same}   speedup: {ratio:.1f}x")
                if not same:
                    raise SystemExit("backend decisions diverged")


if __name__ == "__main__":
    main()
