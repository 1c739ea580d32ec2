"""Ensemble statistics of the filtering matrix and analytical hardware-cost models.

The statistical helpers take a batch of ``W`` matrices (``(T, K, K)``) and
return plain floats; the cost models evaluate closed-form adder, multiplier
and clock counts exactly with :class:`fractions.Fraction`.
"""

import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .channel import CorrelationSpec, PathLossSpec, assemble_realization, correlation_frobenius_sq
from .detectors import Initializer, build_initializer, theta_frobenius
from .errors import TooSmall, UnknownMethod

__all__ = [
    "DOMINANCE_SENTINEL",
    "DominanceReport",
    "CostReport",
    "sample_w",
    "gram_mean_error",
    "offdiag_variance_error",
    "theta_norm",
    "residual_phi",
    "dominance_report",
    "dominance_ratios",
    "complexity_model",
    "latency_model",
    "throughput_model",
    "truncate_2dp",
    "cost_report",
]

# Stand-in for an infinite dominance ratio (zero off-band mass).
DOMINANCE_SENTINEL = sys.float_info.max


@dataclass(frozen=True)
class DominanceReport:
    ratio_dia: float
    ratio_tri: float
    band_l1: np.ndarray  # index k + K - 1 holds band k, k = -(K-1)..K-1


@dataclass(frozen=True)
class CostReport:
    method: str
    real_adders: Fraction
    real_multipliers: Fraction
    latency_clocks: Optional[int] = None
    throughput_mbps: Optional[Fraction] = None

    def as_row(self):
        return {
            "method": self.method,
            "real_adders": str(self.real_adders),
            "real_multipliers": str(self.real_multipliers),
            "latency_clocks": self.latency_clocks,
            "throughput_mbps": None if self.throughput_mbps is None else truncate_2dp(self.throughput_mbps),
        }


def sample_w(n, k, zeta, count, seed=None, eta2=0.1, sigma=None):
    """Draw ``count`` filtering matrices for ``N`` antennas and ``K`` users."""
    corr = CorrelationSpec(n, zeta)
    loss = PathLossSpec(tuple(sigma)) if sigma is not None else PathLossSpec.uniform(k)
    return assemble_realization(corr, loss, eta2, seed, size=count).w


# ---------------------------------------------------------------- filtering-matrix moments


def gram_mean_error(w, n, sigma=None):
    """``||mean(W)/N - Sigma||_F / ||Sigma||_F`` over the batch ``w``."""
    k = w.shape[-1]
    target = np.diag(np.ones(k) if sigma is None else np.asarray(sigma, dtype=float))
    mean = np.mean(w, axis=0) / n
    return float(np.linalg.norm(mean - target) / np.linalg.norm(target))


def offdiag_variance_error(w, n, zeta, sigma=None):
    """Relative gap between the mean off-diagonal sample variance and ``||R||_F^2``.

    Each off-diagonal ``w_ij`` (i > j) is normalized by ``sigma_i sigma_j``
    before averaging.
    """
    k = w.shape[-1]
    sig = np.ones(k) if sigma is None else np.asarray(sigma, dtype=float)
    i, j = np.tril_indices(k, -1)
    entries = w[:, i, j]
    var = np.var(entries, axis=0, ddof=1) / (sig[i] * sig[j])
    expected = correlation_frobenius_sq(n, zeta)
    return float(abs(np.mean(var) - expected) / expected)


# ---------------------------------------------------------------- convergence measures


def theta_norm(w, initializer):
    """Frobenius norm of ``I - X^{-1} W`` (batched: one value per matrix)."""
    _, theta = build_initializer(w, initializer)
    out = theta_frobenius(theta)
    return float(out) if np.ndim(out) == 0 else out


def residual_phi(w, initializer, iterations, s_hat):
    """Residual estimation error ``||Theta^L s_hat||_2^2``.

    ``s_hat`` is the exact MMSE estimate; the value equals the squared norm of
    the gap between exact and ``L``-term symbol estimates.
    """
    _, theta = build_initializer(w, initializer)
    power = np.linalg.matrix_power(theta, iterations)
    err = np.einsum("...ij,...j->...i", power, s_hat)
    out = np.sum(np.abs(err) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _ratio(num, den):
    return DOMINANCE_SENTINEL if den == 0 else float(num / den)


def dominance_report(w):
    """Entrywise l1 mass per diagonal band and the two dominance ratios."""
    w = np.asarray(w)
    k = w.shape[-1]
    if k < 2:
        raise TooSmall("dominance report needs K >= 2")
    i, j = np.indices((k, k))
    lag = i - j
    mag = np.abs(w)
    band_l1 = np.array([mag[lag == d].sum() for d in range(-(k - 1), k)])
    total = band_l1.sum()
    main = band_l1[k - 1]
    tri = band_l1[k - 2 : k + 1].sum()
    return DominanceReport(ratio_dia=_ratio(main, total - main), ratio_tri=_ratio(tri, total - tri), band_l1=band_l1)


def dominance_ratios(w_batch):
    """``(ratio_dia, ratio_tri)`` arrays for a batch of matrices."""
    k = w_batch.shape[-1]
    i, j = np.indices((k, k))
    lag = np.abs(i - j)
    mag = np.abs(w_batch)
    total = mag.sum(axis=(-2, -1))
    main = (mag * (lag == 0)).sum(axis=(-2, -1))
    tri = (mag * (lag <= 1)).sum(axis=(-2, -1))
    return main / (total - main), tri / (total - tri)


# ---------------------------------------------------------------- cost models


def _method(method):
    m = str(method).lower()
    if m in ("cd", "cholesky", "exact"):
        return "cd"
    if m in ("dns", "tma"):
        return m
    raise UnknownMethod(f"no cost model for {method!r}")


def complexity_model(method, k):
    """Real adders and real multipliers of one ``K``-user detector."""
    m = _method(method)
    k = Fraction(k)
    if m == "dns":
        return 2 * k**2 + 8 * k + 1, 2 * k**2 + 10 * k
    if m == "tma":
        return 2 * k**2 + 16 * k + 12, 2 * k**2 + 18 * k + 12
    return 2 * k**3 / 3 + 4 * k / 3, 2 * k**3 + k**2 + k / 3


def latency_model(method, k, n, iterations=None):
    """Pipeline latency in clocks."""
    m = _method(method)
    if m == "cd":
        return n + 4 * k + 5
    if iterations is None or iterations < 1:
        raise ValueError(f"{m} latency needs iterations >= 1")
    extra = -4 if m == "dns" else -2
    return iterations * (k + 1) + n + 2 * k + extra


def throughput_model(latency_clocks, clock_mhz, k, bits_per_symbol, instances=1):
    """``instances * K * bits * f / latency`` in Mb/s, as an exact fraction when inputs are rational."""
    if latency_clocks <= 0:
        raise ValueError("latency must be positive")
    return Fraction(instances * k * bits_per_symbol) * Fraction(clock_mhz) / Fraction(latency_clocks)


def truncate_2dp(value):
    """Two-decimal truncation (not rounding) of a throughput figure."""
    frac = Fraction(value)
    return float(Fraction(int(frac * 100), 100)) if frac >= 0 else -truncate_2dp(-frac)


def cost_report(method, k, n, iterations=None, clock_mhz=225, bits_per_symbol=6, instances=1):
    adders, mults = complexity_model(method, k)
    latency = latency_model(method, k, n, iterations)
    thr = throughput_model(latency, clock_mhz, k, bits_per_symbol, instances)
    return CostReport(str(method).lower(), adders, mults, latency, thr)
