"""Monte-Carlo BER engine, iteration-count search and result emission.

Randomness is organized in fixed-size blocks of channel realizations. Block
``b`` of point ``p`` draws from ``SeedSequence([master_seed, stream, p, b])``,
and blocks are reduced strictly in index order, so a run is bit-identical
for any worker count.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import cost_report
from .channel import (
    CorrelationSpec,
    PathLossSpec,
    assemble_realization,
    build_correlation_matrix,
    complex_normal,
)
from .config import SimConfig
from .detectors import (
    Initializer,
    approximate_inverse,
    build_initializer,
    nse_partial_sums,
    theta_frobenius,
)
from .errors import NoConvergence, UnknownMethod
from .linalg import cholesky_solve, hermitian_sqrt
from .qam import bits_per_symbol, qam_demodulate_hard, qam_modulate

__all__ = [
    "BerCurve",
    "IterationSearchResult",
    "run_ber_sweep",
    "search_iterations",
    "find_min_iterations",
    "snr_at_ber",
    "emit_results",
    "emit_search_results",
    "write_table",
    "write_manifest",
    "manifest",
    "SWEEP_STREAM",
    "PILOT_STREAM",
    "SEARCH_STREAM",
]

SWEEP_STREAM = 0
PILOT_STREAM = 1
SEARCH_STREAM = 2

CSV_COLUMNS = ["method", "snr_db", "ber", "bit_errors", "bits", "diverged_fraction", "unreliable"]


@dataclass
class BerCurve:
    method: str
    snr_db: np.ndarray
    bit_errors: np.ndarray
    bits_simulated: np.ndarray
    diverged_fraction: np.ndarray
    realizations: np.ndarray
    min_bit_errors: int = 0

    @property
    def ber(self):
        return self.bit_errors / self.bits_simulated

    @property
    def unreliable(self):
        return self.bit_errors < self.min_bit_errors


@dataclass
class IterationSearchResult:
    method: str
    zeta: float
    beta: float
    l_min: Optional[int]
    gap_db: float
    reference_snr_db: Optional[float] = None
    diverged_fraction: float = 0.0
    gaps_db: List[float] = field(default_factory=list, repr=False)

    def as_row(self):
        return {
            "method": self.method,
            "zeta": self.zeta,
            "beta": self.beta,
            "l_min": self.l_min,
            "gap_db": self.gap_db,
            "reference_snr_db": self.reference_snr_db,
            "diverged_fraction": self.diverged_fraction,
        }


# ------------------------------------------------------------------ block machinery


@lru_cache(maxsize=16)
def _r_sqrt(n, zeta, phase_mode, phase_seed):
    return hermitian_sqrt(build_correlation_matrix(CorrelationSpec(n, zeta, phase_mode, phase_seed)))


def _block_rng(master_seed, stream, point, block):
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), stream, point, block]))


def _draw_block(cfg, rng, snr_db):
    """One block of realizations: returns ``(w, bits, y_hat)`` with y_hat shaped ``(F, B, K)``."""
    eta2 = 10.0 ** (-snr_db / 10.0)
    corr = CorrelationSpec(cfg.n, cfg.zeta, cfg.phase_mode, cfg.master_seed)
    r_sqrt = _r_sqrt(cfg.n, cfg.zeta, cfg.phase_mode, cfg.master_seed)
    real = assemble_realization(corr, PathLossSpec.uniform(cfg.k), eta2, rng, size=cfg.block_size, r_sqrt=r_sqrt)
    nb = bits_per_symbol(cfg.order)
    f, b = cfg.frames_per_realization, cfg.block_size
    bits = rng.integers(0, 2, size=(f, b, cfg.k * nb), dtype=np.uint8)
    s = qam_modulate(bits, cfg.order)
    clean = np.einsum("bnk,fbk->fbn", real.gamma, s)
    y = clean + complex_normal(rng, clean.shape, eta2)
    y_hat = np.einsum("bnk,fbn->fbk", np.conj(real.gamma), y)
    return real.w, bits, y_hat


def _count_errors(s_hat, bits, order):
    decided = qam_demodulate_hard(s_hat, order)
    return int(np.count_nonzero(decided != bits))


def _apply_exact(w, y_hat):
    # y_hat (F, B, K) -> solve per realization with all frames as columns
    sol = cholesky_solve(w, np.transpose(y_hat, (1, 2, 0)))
    return np.transpose(sol, (2, 0, 1))


def _sweep_block(args):
    cfg_dict, point, block = args
    cfg = SimConfig.from_dict(cfg_dict)
    rng = _block_rng(cfg.master_seed, SWEEP_STREAM, point, block)
    w, bits, y_hat = _draw_block(cfg, rng, cfg.snr_db[point])
    errors, diverged = [], []
    for spec in cfg.detector_specs:
        if spec.method == "exact":
            s_hat = _apply_exact(w, y_hat)
            diverged.append(0)
        else:
            w_inv = approximate_inverse(spec, w)
            _, theta = build_initializer(w, spec.initializer)
            diverged.append(int(np.count_nonzero(theta_frobenius(theta) >= 1.0)))
            s_hat = np.einsum("bij,fbj->fbi", w_inv, y_hat)
        errors.append(_count_errors(s_hat, bits, cfg.order))
    return np.array(errors), np.array(diverged), bits.size, cfg.block_size


def _run_blocks(fn, make_args, should_stop, workers):
    """Evaluate blocks 0, 1, 2, ... in order until ``should_stop(totals)``.

    With several workers, blocks are computed a round at a time but folded in
    strictly by index, and surplus blocks of the last round are dropped.
    """
    totals = None
    block = 0
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            count = workers if pool else 1
            batch = [make_args(block + i) for i in range(count)]
            results = list(pool.map(fn, batch)) if pool else [fn(batch[0])]
            for res in results:
                totals = res if totals is None else tuple(t + r for t, r in zip(totals, res))
                block += 1
                if should_stop(totals):
                    return totals
    finally:
        if pool:
            pool.shutdown()


# ------------------------------------------------------------------ BER sweep


def run_ber_sweep(cfg, workers=1):
    """Simulate every detector of ``cfg`` at every SNR point on shared realizations.

    A point stops once it has at least ``cfg.trials`` realizations and every
    detector has ``cfg.min_bit_errors`` errors, or after ``cfg.max_bits`` bits.
    """
    if cfg.snr_db is None:
        raise ValueError("a BER sweep needs an explicit snr_db list")
    specs = cfg.detector_specs
    cfg_dict = cfg.to_dict()
    n_pts = len(cfg.snr_db)
    errs = np.zeros((len(specs), n_pts), dtype=np.int64)
    div = np.zeros((len(specs), n_pts), dtype=np.int64)
    bits = np.zeros(n_pts, dtype=np.int64)
    reals = np.zeros(n_pts, dtype=np.int64)

    def stop(t):
        e, _, nbits, nreal = t
        done = nreal >= cfg.trials and e.min() >= cfg.min_bit_errors
        return done or nbits >= cfg.max_bits

    for p in range(n_pts):
        e, d, nb, nr = _run_blocks(_sweep_block, lambda b, p=p: (cfg_dict, p, b), stop, workers)
        errs[:, p], div[:, p], bits[p], reals[p] = e, d, nb, nr

    snr = np.array(cfg.snr_db, dtype=float)
    return [
        BerCurve(
            method=spec.label,
            snr_db=snr,
            bit_errors=errs[i],
            bits_simulated=bits.copy(),
            diverged_fraction=div[i] / reals,
            realizations=reals.copy(),
            min_bit_errors=cfg.min_bit_errors,
        )
        for i, spec in enumerate(specs)
    ]


# ------------------------------------------------------------------ iteration search


def snr_at_ber(snr_db, ber, target):
    """SNR where the curve first falls to ``target``, by log-linear interpolation.

    Returns ``None`` when the curve never reaches the target and ``-inf`` when
    it already starts below it.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    if ber[0] <= target:
        return -math.inf
    log_t = math.log10(target)
    for i in range(1, len(ber)):
        if ber[i] <= target:
            hi = math.log10(ber[i - 1])
            lo = math.log10(ber[i]) if ber[i] > 0 else None
            if lo is None or hi == lo:
                # zero-error point: fall back to linear interpolation in BER
                frac = (ber[i - 1] - target) / (ber[i - 1] - ber[i])
            else:
                frac = (hi - log_t) / (hi - lo)
            return float(snr_db[i - 1] + frac * (snr_db[i] - snr_db[i - 1]))
    return None


def _resolve_family(fam):
    if callable(fam) and not isinstance(fam, Initializer):
        return fam, getattr(fam, "__name__", "custom")
    kind = Initializer(fam)
    return kind, kind.value


def _family_inverse(fam, w):
    if isinstance(fam, Initializer):
        return build_initializer(w, fam)
    x_inv = fam(w)
    return x_inv, np.eye(w.shape[-1]) - x_inv @ w


def _search_block(args):
    cfg_dict, families, stream, snr_list, point, block = args
    cfg = SimConfig.from_dict(cfg_dict)
    rng = _block_rng(cfg.master_seed, stream, point, block)
    w, bits, y_hat = _draw_block(cfg, rng, snr_list[point])
    ref = _count_errors(_apply_exact(w, y_hat), bits, cfg.order)
    l_max = cfg.max_iterations
    errs = np.zeros((len(families), l_max), dtype=np.int64)
    div = np.zeros(len(families), dtype=np.int64)
    for f, fam in enumerate(families):
        x_inv, theta = _family_inverse(fam, w)
        div[f] = np.count_nonzero(theta_frobenius(theta) >= 1.0)
        sums = nse_partial_sums(x_inv, theta, y_hat, l_max)  # (L, F, B, K)
        decided = qam_demodulate_hard(sums, cfg.order)
        errs[f] = np.count_nonzero(decided != bits[None], axis=(1, 2, 3))
    return np.array([ref]), errs, div, bits.size, cfg.block_size


def _pilot_crossing(cfg, workers):
    """Rough reference-detector SNR at the target BER from a coarse 2 dB grid."""
    grid = [float(x) for x in np.arange(-10.0, 40.1, 2.0)]
    cfg_dict = dict(cfg.to_dict(), detectors=["exact"])
    bers = []
    for p, _ in enumerate(grid):
        args = lambda b, p=p: (cfg_dict, [], PILOT_STREAM, grid, p, b)
        ref, _, _, nbits, _ = _run_blocks(
            _search_block_ref_only, args, lambda t: t[4] >= 2 * cfg.block_size or t[0][0] >= 100, workers
        )
        bers.append(ref[0] / nbits)
        if bers[-1] < cfg.target_ber / 10:
            break
    crossing = snr_at_ber(grid[: len(bers)], bers, cfg.target_ber)
    if crossing is None or math.isinf(crossing):
        raise NoConvergence("reference detector never crosses the target BER on the pilot grid")
    return crossing


def _search_block_ref_only(args):
    cfg_dict, _, stream, snr_list, point, block = args
    cfg = SimConfig.from_dict(dict(cfg_dict, max_iterations=1))
    rng = _block_rng(cfg.master_seed, stream, point, block)
    w, bits, y_hat = _draw_block(cfg, rng, snr_list[point])
    ref = _count_errors(_apply_exact(w, y_hat), bits, cfg.order)
    return np.array([ref]), np.zeros((0, 1), dtype=np.int64), np.zeros(0, dtype=np.int64), bits.size, cfg.block_size


def search_iterations(cfg, families=(Initializer.DIAGONAL, Initializer.TRIDIAGONAL_BANDED), workers=1):
    """Smallest ``L`` per family meeting the gap criterion, on shared realizations.

    Every family and every ``L = 1..cfg.max_iterations`` is scored on the same
    channel, symbol and noise draws as the exact reference, so the gaps are
    compared with common random numbers. Returns ``(results, curves)``.
    """
    resolved = [_resolve_family(f) for f in families]
    fams = [r[0] for r in resolved]
    names = [r[1] for r in resolved]
    if cfg.snr_db is None:
        centre = _pilot_crossing(cfg, workers)
        snr_list = [round(centre + d, 6) for d in np.arange(-1.0, 1.501, 0.25)]
    else:
        snr_list = list(cfg.snr_db)
    cfg_dict = cfg.to_dict()

    def stop(t):
        ref, _, _, nbits, nreal = t
        done = nreal >= cfg.trials and ref[0] >= cfg.min_bit_errors
        return done or nbits >= cfg.max_bits

    n_pts = len(snr_list)
    ref_err = np.zeros(n_pts, dtype=np.int64)
    fam_err = np.zeros((len(fams), cfg.max_iterations, n_pts), dtype=np.int64)
    div = np.zeros((len(fams), n_pts), dtype=np.int64)
    bits = np.zeros(n_pts, dtype=np.int64)
    reals = np.zeros(n_pts, dtype=np.int64)
    for p in range(n_pts):
        args = lambda b, p=p: (cfg_dict, fams, SEARCH_STREAM, snr_list, p, b)
        r, e, d, nb, nr = _run_blocks(_search_block, args, stop, workers)
        ref_err[p], fam_err[:, :, p], div[:, p], bits[p], reals[p] = r[0], e, d, nb, nr

    snr = np.array(snr_list)
    ref_snr = snr_at_ber(snr, ref_err / bits, cfg.target_ber)
    if ref_snr is None or math.isinf(ref_snr):
        raise NoConvergence("reference curve does not bracket the target BER; widen snr_db")

    curves = [BerCurve("exact", snr, ref_err, bits, np.zeros(n_pts), reals, cfg.min_bit_errors)]
    results = {}
    for f, name in enumerate(names):
        gaps = []
        l_min = None
        for l in range(cfg.max_iterations):
            s = snr_at_ber(snr, fam_err[f, l] / bits, cfg.target_ber)
            gap = math.inf if s is None else s - ref_snr
            gaps.append(gap)
            if l_min is None and gap <= cfg.gap_db:
                l_min = l + 1
        results[name] = IterationSearchResult(
            method=name,
            zeta=cfg.zeta,
            beta=cfg.beta,
            l_min=l_min,
            gap_db=gaps[l_min - 1] if l_min else math.inf,
            reference_snr_db=ref_snr,
            diverged_fraction=float(div[f].sum() / reals.sum()),
            gaps_db=gaps,
        )
        for l in range(cfg.max_iterations):
            curves.append(BerCurve(f"{name}:{l + 1}", snr, fam_err[f, l], bits, div[f] / reals, reals, cfg.min_bit_errors))
    return results, curves


def find_min_iterations(cfg, family, zeta=None, beta=None, workers=1):
    """Smallest ``L`` for one detector family; raises NoConvergence past ``cfg.max_iterations``."""
    overrides = {}
    if zeta is not None:
        overrides["zeta"] = float(zeta)
    if beta is not None:
        k = cfg.n / beta
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"beta={beta} does not divide N={cfg.n}")
        overrides["k"] = int(round(k))
    run_cfg = SimConfig.from_dict(dict(cfg.to_dict(), **overrides)) if overrides else cfg
    results, _ = search_iterations(run_cfg, [family], workers=workers)
    res = next(iter(results.values()))
    if res.l_min is None:
        raise NoConvergence(f"{res.method}: no L <= {run_cfg.max_iterations} within {run_cfg.gap_db} dB")
    return res


# ------------------------------------------------------------------ output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _curve_rows(curves):
    for c in curves:
        for i in range(len(c.snr_db)):
            yield {
                "method": c.method,
                "snr_db": c.snr_db[i],
                "ber": c.ber[i],
                "bit_errors": c.bit_errors[i],
                "bits": c.bits_simulated[i],
                "diverged_fraction": c.diverged_fraction[i],
                "unreliable": bool(c.unreliable[i]),
            }


def _cost_reports(cfg):
    reports = {}
    for spec in cfg.detector_specs:
        method = "cd" if spec.method == "exact" else spec.method
        try:
            rep = cost_report(method, cfg.k, cfg.n, spec.iterations)
        except (UnknownMethod, ValueError):
            reports[spec.label] = None
            continue
        reports[spec.label] = rep.as_row()
    return reports


def manifest(cfg, extra=None):
    doc = {
        "artifact_version": __version__,
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "snr_definition": "per-user transmit SNR = 1/eta2 in dB, unit-energy symbols",
        "arithmetic": "float64 throughout; fixed-point quantization is not modeled",
        "cost_reports": _cost_reports(cfg),
    }
    if extra:
        doc.update(extra)
    return doc


def write_table(rows, columns, path, fmt="csv"):
    """Write ``rows`` (dicts) as ``path.csv`` or ``path.json``; returns the file written."""
    path = Path(path)
    if fmt == "json":
        path = path.with_suffix(".json")
        doc = [{c: r[c] for c in columns} for r in rows]
        path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8")
        return path
    if fmt != "csv":
        raise ValueError(f"unknown output format {fmt!r}")
    path = path.with_suffix(".csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow(["" if r[c] is None else r[c] if isinstance(r[c], str) else _fmt(r[c]) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def write_manifest(cfg, path, extra=None):
    man = Path(path) / "manifest.json"
    man.write_text(json.dumps(manifest(cfg, extra), indent=2, default=_json_default) + "\n", encoding="utf-8")
    return man


def emit_results(curves, cfg, path, fmt="csv", name="sweep", extra=None):
    """Write the BER table (when there are curves) and ``manifest.json`` into ``path``.

    Returns the list of files written.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if curves:
        written.append(write_table(list(_curve_rows(curves)), CSV_COLUMNS, out / name, fmt))
    written.append(write_manifest(cfg, out, extra))
    return written


def emit_search_results(results, cfg, path, fmt="csv", extra=None):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.as_row() for r in results]
    columns = ["method", "zeta", "beta", "l_min", "gap_db", "reference_snr_db", "diverged_fraction"]
    written = [write_table(rows, columns, out / "itersearch", fmt)]
    written.append(write_manifest(cfg, out, extra))
    return written


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
