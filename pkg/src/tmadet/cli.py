"""Command-line entry point: ``tmadet {sweep,itersearch,stats,cost}``."""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    cost_report,
    dominance_ratios,
    dominance_report,
    sample_w,
    gram_mean_error,
    offdiag_variance_error,
    theta_norm,
)
from .config import SimConfig, load_config
from .detectors import Initializer
from .errors import TmaError
from .sim import emit_results, emit_search_results, run_ber_sweep, search_iterations, write_manifest, write_table
from .tridiag import extract_tridiagonal, p_attenuation_statistic, step2_error_percentage

log = logging.getLogger("tmadet")

DEFAULT_BETAS = (8.0, 16.0)
DEFAULT_ZETAS = (0.0, 0.3, 0.5)
STATS_ZETAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


def _base_config(args, **defaults):
    if args.config:
        cfg = load_config(args.config)
        data = cfg.to_dict()
    else:
        data = dict(defaults)
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.out is not None:
        data["output_path"] = args.out
    return SimConfig.from_dict(data)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_sweep(args):
    cfg = _base_config(args)
    t0 = time.time()
    curves = run_ber_sweep(cfg, workers=args.workers)
    files = emit_results(curves, cfg, cfg.output_path, fmt=args.format, name="sweep", extra={"command": "sweep"})
    log.info("sweep finished in %.1f s", time.time() - t0)
    for f in files:
        print(f)
    return 0


def cmd_itersearch(args):
    cfg = _base_config(args, snr_db=None, max_iterations=40)
    families = [Initializer(f) for f in args.families.split(",")]
    betas = _floats(args.betas) if args.betas else DEFAULT_BETAS
    zetas = _floats(args.zetas) if args.zetas else DEFAULT_ZETAS
    results = []
    for beta in betas:
        k = cfg.n / beta
        if abs(k - round(k)) > 1e-9:
            raise SystemExit(f"beta={beta} does not divide N={cfg.n}")
        for zeta in zetas:
            cell = SimConfig.from_dict(dict(cfg.to_dict(), k=int(round(k)), zeta=zeta))
            t0 = time.time()
            res, _ = search_iterations(cell, families, workers=args.workers)
            for r in res.values():
                log.info("beta=%g zeta=%g %s: L=%s gap=%.3f dB (%.1f s)", beta, zeta, r.method, r.l_min, r.gap_db, time.time() - t0)
                results.append(r)
    files = emit_search_results(results, cfg, cfg.output_path, fmt=args.format, extra={"command": "itersearch", "betas": list(betas), "zetas": list(zetas)})
    for r in results:
        print(f"{r.method:4s} beta={r.beta:<5g} zeta={r.zeta:<4g} L_min={r.l_min} gap_db={r.gap_db:.3f}")
    for f in files:
        print(f)
    return 0


def cmd_stats(args):
    cfg = _base_config(args, n=192, k=12)
    zetas = _floats(args.zetas) if args.zetas else STATS_ZETAS
    rows, bands = [], []
    for idx, zeta in enumerate(zetas):
        w = sample_w(cfg.n, cfg.k, zeta, args.realizations, seed=[cfg.master_seed, idx], eta2=args.eta2)
        tri = extract_tridiagonal(w)
        rd, rt = dominance_ratios(w)
        vals = {
            "gram_mean_error": gram_mean_error(w, cfg.n),
            "offdiag_variance_error": offdiag_variance_error(w, cfg.n, zeta),
            "p_attenuation": p_attenuation_statistic(tri),
            "step2_error_pct": step2_error_percentage(tri),
            "ratio_dia_mean": float(np.mean(rd)),
            "ratio_tri_mean": float(np.mean(rt)),
            "theta_dia_median": float(np.median(theta_norm(w, Initializer.DIAGONAL))),
            "theta_tri_median": float(np.median(theta_norm(w, Initializer.TRIDIAGONAL_EXACT))),
            "theta_tma_median": float(np.median(theta_norm(w, Initializer.TRIDIAGONAL_BANDED))),
        }
        rows.extend({"quantity": q, "zeta": zeta, "value": v} for q, v in vals.items())
        profile = dominance_report(w[0]).band_l1
        k = cfg.k
        bands.extend({"zeta": zeta, "band": d, "l1": profile[d + k - 1]} for d in range(-(k - 1), k))
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    files = [
        write_table(rows, ["quantity", "zeta", "value"], out / "stats", args.format),
        write_table(bands, ["zeta", "band", "l1"], out / "band_profile", args.format),
        write_manifest(cfg, out, {"command": "stats", "realizations": args.realizations, "eta2": args.eta2}),
    ]
    for r in rows:
        print(f"zeta={r['zeta']:<4g} {r['quantity']:<24s} {r['value']:.6g}")
    for f in files:
        print(f)
    return 0


def cmd_cost(args):
    cfg = _base_config(args)
    rows = []
    iters = {"dns": args.dns_iterations, "tma": args.tma_iterations, "cd": None}
    for method in ("cd", "dns", "tma"):
        rep = cost_report(method, cfg.k, cfg.n, iters[method], clock_mhz=args.clock_mhz, bits_per_symbol=args.bits, instances=args.instances)
        rows.append(rep.as_row())
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["method", "real_adders", "real_multipliers", "latency_clocks", "throughput_mbps"]
    files = [write_table(rows, cols, out / "cost", args.format), write_manifest(cfg, out, {"command": "cost"})]
    for r in rows:
        print("  ".join(f"{c}={r[c]}" for c in cols))
    for f in files:
        print(f)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tmadet", description="Neumann-series MMSE detection experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (or a run manifest) mirroring SimConfig")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="BER vs SNR curves")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("itersearch", parents=[common], help="smallest iteration count per (beta, zeta) cell")
    p.add_argument("--betas", help="comma-separated N/K ratios (default 8,16)")
    p.add_argument("--zetas", help="comma-separated correlation coefficients (default 0,0.3,0.5)")
    p.add_argument("--families", default="dns,tma", help="comma-separated initializers: dns, tns, tma")
    p.set_defaults(func=cmd_itersearch)

    p = sub.add_parser("stats", parents=[common], help="ensemble statistics of the filtering matrix")
    p.add_argument("--zetas", help="comma-separated correlation coefficients")
    p.add_argument("--realizations", type=int, default=1000)
    p.add_argument("--eta2", type=float, default=0.1)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cost", parents=[common], help="complexity, latency and throughput models")
    p.add_argument("--dns-iterations", type=int, default=4)
    p.add_argument("--tma-iterations", type=int, default=3)
    p.add_argument("--clock-mhz", type=float, default=225)
    p.add_argument("--bits", type=int, default=6)
    p.add_argument("--instances", type=int, default=1)
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except TmaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
