"""Command line front end.

Subcommands:
    ber          BER/FER sweep over an SNR grid
    sensitivity  BER under interference mismatch (channel offset vs detector)
    gaintrace    per-step adaptive gain and interference estimate for one sector
    dmin         minimum-distance table over track counts and eps values
    eigen        coupling eigenstructure report for n tracks

Grids are written start:stop:step (inclusive of stop up to rounding) or as
comma lists. All outputs are CSV; --out writes a file, otherwise stdout.
"""
from __future__ import annotations

import argparse
import json
from dataclasses import replace

from .channel import ItiProfile
from .eigen import channel_alphabet, toeplitz_eigen
from .sim import (
    RESULT_FIELDS,
    SimConfig,
    format_value,
    resolve_target,
    run_ber_sweep,
    run_dmin_table,
    run_gain_trace,
    run_sensitivity_sweep,
    write_csv,
)


def parse_grid(text: str) -> list[float]:
    """'a:b:s' inclusive grid, or 'v1,v2,...', or a single value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid {text!r} is not start:stop:step")
        a, b, s = (float(p) for p in parts)
        if s == 0:
            raise argparse.ArgumentTypeError("grid step must be nonzero")
        k = int(round((b - a) / s))
        return [round(a + i * s, 12) for i in range(k + 1)]
    return [float(v) for v in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with SimConfig fields; flags override")
    p.add_argument("--seed", type=int, help="base RNG seed (default 0)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--target", help="dicode | epr4 | taps=h0,h1,... (default dicode)")
    p.add_argument("--n", type=int, help="number of tracks (default 2)")
    p.add_argument("--eps0", type=float, help="nominal interference level")
    p.add_argument("--profile", choices=["static", "sin"], help="interference profile kind")
    p.add_argument("--amplitude", type=float, help="sin profile amplitude (default 0.1)")
    p.add_argument("--cycles", type=float, help="sin profile cycles per sector (default 2)")
    p.add_argument("--detectors", help="comma list: ml,wssjd,ssjd,wssjd-adaptive,shst-conv,shst-itifree")
    p.add_argument("--snr", help="SNR grid in dB, start:stop:step or comma list")
    p.add_argument("--sectors", type=int, help="sectors per point (default 8)")
    p.add_argument("--sector-len", type=int, help="trellis steps per sector (default 4096)")
    p.add_argument("--beta", type=float, help="LMS step size (default 0.008)")
    p.add_argument("--delay", type=int, help="decision delay (default 4*nu+1)")
    p.add_argument("--train-bits", type=int, help="training bits for gain init (default 256; 0 disables)")
    p.add_argument("--min-errors", type=int, help="stop a point once every detector has this many bit errors")
    p.add_argument("--eps-detector", type=float, help="interference level assumed by the detector (default eps0)")
    p.add_argument("--delta-eps", type=float, help="static offset applied to the channel (default 0)")


def build_config(args) -> SimConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            base = json.load(f)
    if isinstance(base.get("profile"), dict):
        base["profile"] = ItiProfile(**base["profile"])

    prof = base.get("profile", ItiProfile.static(0.1))
    kind = args.profile or prof.kind
    eps0 = prof.eps0 if args.eps0 is None else args.eps0
    if kind == "sin":
        amp = prof.amplitude if args.amplitude is None else args.amplitude
        if amp == 0.0:
            amp = 0.1
        cyc = prof.cycles if args.cycles is None else args.cycles
        base["profile"] = ItiProfile.sinusoidal(eps0, amp, cyc)
    else:
        base["profile"] = ItiProfile.static(eps0)

    overrides = dict(
        seed=args.seed, jobs=args.jobs, target=args.target, n=args.n,
        sectors=args.sectors, sector_len=args.sector_len, beta=args.beta,
        delay=args.delay, train_bits=args.train_bits, min_errors=args.min_errors,
        eps_detector=args.eps_detector, delta_eps=args.delta_eps,
    )
    if args.detectors:
        overrides["detectors"] = tuple(args.detectors.split(","))
    if args.snr:
        overrides["snr_db"] = tuple(parse_grid(args.snr))
    for k, v in overrides.items():
        if v is not None:
            base[k] = v
    return SimConfig.from_dict(base)


def cmd_ber(args) -> int:
    cfg = build_config(args)
    write_csv(run_ber_sweep(cfg), RESULT_FIELDS, args.out)
    return 0


def cmd_sensitivity(args) -> int:
    cfg = build_config(args)
    deltas = parse_grid(args.deltas)
    write_csv(run_sensitivity_sweep(cfg, deltas), RESULT_FIELDS, args.out)
    return 0


def cmd_gaintrace(args) -> int:
    cfg = build_config(args)
    if args.train_bits is None:
        cfg = replace(cfg, train_bits=0)  # trace convergence from unit gains
    snr = cfg.snr_db[0] if args.snr is None else parse_grid(args.snr)[0]
    _, _, trace = run_gain_trace(cfg, snr, sector_index=args.sector)
    eps_hat = trace.eps_hat
    rows = []
    for k in range(trace.gains.shape[0]):
        for j in range(trace.gains.shape[1]):
            rows.append(dict(k=k, channel=j, gain=float(trace.gains[k, j]),
                             eps_hat=float(eps_hat[k])))
    write_csv(rows, ["k", "channel", "gain", "eps_hat"], args.out)
    return 0


def cmd_dmin(args) -> int:
    h = resolve_target(args.target or "dicode")
    n_list = _ints(args.n) if args.n else [2]
    eps_list = parse_grid(args.eps)
    deltas = parse_grid(args.deltas) if args.deltas else None
    rows = run_dmin_table(n_list, eps_list, h, deltas=deltas, max_len=args.max_len)
    write_csv(rows, ["n", "eps", "delta_eps", "mode", "d_min_sq", "event_class"], args.out)
    return 0


def cmd_eigen(args) -> int:
    n = args.n or 2
    eps0 = 0.1 if args.eps0 is None else args.eps0
    sys = toeplitz_eigen(n)
    lam = sys.lambdas(eps0)
    w = sys.metric_weights(eps0)
    g = sys.gains(eps0)
    lines = ["section,i,j,value"]
    for j in range(n):
        lines.append(f"lambda_hat,,{j},{format_value(float(sys.lambda_hat[j]))}")
    for j in range(n):
        lines.append(f"lambda,,{j},{format_value(float(lam[j]))}")
    for j in range(n):
        lines.append(f"weight,,{j},{format_value(float(w[j]))}")
    for j in range(n):
        lines.append(f"gain,,{j},{format_value(float(g[j]))}")
    for i in range(n):
        for j in range(n):
            lines.append(f"eigenvector,{i},{j},{format_value(float(sys.V[i, j]))}")
    for j in range(n):
        alph = sorted(channel_alphabet(sys, j))
        lines.append(f"alphabet_size,,{j},{len(alph)}")
        for v in alph:
            lines.append(f"alphabet,,{j},{format_value(float(v))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        print(text, end="")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="mhmt",
                                 description="multitrack detection simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber", help="BER sweep over SNR")
    _add_common(p)
    p.set_defaults(fn=cmd_ber)

    p = sub.add_parser("sensitivity", help="BER under interference mismatch")
    _add_common(p)
    p.add_argument("--deltas", required=True,
                   help="channel offsets from eps0, start:stop:step or comma list")
    p.set_defaults(fn=cmd_sensitivity)

    p = sub.add_parser("gaintrace", help="adaptive gain trajectory for one sector")
    _add_common(p)
    p.add_argument("--sector", type=int, default=0, help="sector index (default 0)")
    p.set_defaults(fn=cmd_gaintrace)

    p = sub.add_parser("dmin", help="minimum distance table")
    p.add_argument("--n", help="comma list of track counts (default 2)")
    p.add_argument("--eps", required=True, help="interference grid, start:stop:step or comma list")
    p.add_argument("--deltas", help="mismatch offsets; adds worst-case mismatch rows (two tracks)")
    p.add_argument("--target", help="dicode | epr4 | taps=... (default dicode)")
    p.add_argument("--max-len", type=int, help="error event length cap for the search")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(fn=cmd_dmin)

    p = sub.add_parser("eigen", help="coupling eigenstructure report")
    p.add_argument("--n", type=int, help="number of tracks (default 2)")
    p.add_argument("--eps0", type=float, help="interference level (default 0.1)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(fn=cmd_eigen)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
