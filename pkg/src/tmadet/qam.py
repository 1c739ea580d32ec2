"""Gray-mapped square QAM with unit average symbol energy.

Bits are grouped ``log2(M)`` at a time; the first half of each group selects
the in-phase level and the second half the quadrature level. Per axis the
Gray label ``g`` of level index ``k`` is ``k ^ (k >> 1)`` and index ``k`` maps
to amplitude ``(sqrt(M) - 1) - 2k``, so an all-zero group lands on the
``(+, +)`` corner: QPSK ``00 -> (1 + 1j) / sqrt(2)``.
"""

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import BitCountMismatch

__all__ = [
    "SUPPORTED_ORDERS",
    "bits_per_symbol",
    "constellation",
    "qam_modulate",
    "qam_demodulate_hard",
    "awgn_ber",
    "rayleigh_ber",
]

SUPPORTED_ORDERS = (4, 16, 64)


def bits_per_symbol(order):
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; choose from {SUPPORTED_ORDERS}")
    return int(math.log2(order))


@lru_cache(maxsize=None)
def _axis_tables(order):
    side = int(math.isqrt(order))
    m = bits_per_symbol(order) // 2
    idx = np.arange(side)
    gray = idx ^ (idx >> 1)
    levels = (side - 1) - 2.0 * idx
    # label -> level and level index -> label bits
    level_of_label = np.empty(side)
    level_of_label[gray] = levels
    label_bits = ((gray[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)
    norm = math.sqrt(2.0 * (order - 1) / 3.0)
    return side, m, level_of_label, label_bits, norm


def constellation(order):
    """All ``order`` points, indexed by the integer value of their bit label."""
    side, m, level_of_label, _, norm = _axis_tables(order)
    labels = np.arange(order)
    i_lab = labels >> m
    q_lab = labels & (side - 1)
    return (level_of_label[i_lab] + 1j * level_of_label[q_lab]) / norm


def _bits_to_int(bits):
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits.astype(np.int64) @ weights


def qam_modulate(bits, order):
    """Map a bit array (last axis a multiple of ``log2(order)``) to symbols."""
    bits = np.asarray(bits)
    nb = bits_per_symbol(order)
    if bits.shape[-1] % nb:
        raise BitCountMismatch(f"{bits.shape[-1]} bits is not a multiple of {nb}")
    side, m, level_of_label, _, norm = _axis_tables(order)
    groups = bits.reshape(bits.shape[:-1] + (-1, nb))
    i_lab = _bits_to_int(groups[..., :m])
    q_lab = _bits_to_int(groups[..., m:])
    return (level_of_label[i_lab] + 1j * level_of_label[q_lab]) / norm


def qam_demodulate_hard(symbols, order):
    """Minimum-distance hard decisions, returned as bits (last axis ``n_sym * log2(order)``)."""
    symbols = np.asarray(symbols)
    side, m, _, label_bits, norm = _axis_tables(order)

    def axis(x):
        k = np.rint(((side - 1) - x * norm) / 2.0)
        return np.clip(k, 0, side - 1).astype(np.int64)

    bi = label_bits[axis(symbols.real)]
    bq = label_bits[axis(symbols.imag)]
    out = np.concatenate([bi, bq], axis=-1)
    return out.reshape(symbols.shape[:-1] + (-1,)) if symbols.ndim else out.ravel()


def _q(x):
    return 0.5 * special.erfc(x / math.sqrt(2.0))


def awgn_ber(snr, order):
    """Exact Gray-coded square-QAM bit error rate over AWGN at symbol SNR ``Es/N0``.

    Uses the per-bit-position decision-region sums for Gray PAM on each axis.
    """
    side = int(math.isqrt(order))
    m = int(math.log2(side))
    snr = np.asarray(snr, dtype=float)
    # half minimum distance over noise std per axis
    arg = np.sqrt(3.0 * snr / (order - 1))
    total = np.zeros_like(snr)
    for k in range(1, m + 1):
        acc = np.zeros_like(snr)
        upper = int((1 - 2.0 ** (-k)) * side)
        for i in range(upper):
            w = int(i * 2.0 ** (k - 1) / side)
            sign = (-1) ** w
            coef = 2.0 ** (k - 1) - int(i * 2.0 ** (k - 1) / side + 0.5)
            acc += sign * coef * 2.0 * _q((2 * i + 1) * arg)
        total += acc / side
    return total / m


def rayleigh_ber(mean_snr, order):
    """Average of :func:`awgn_ber` over an exponentially distributed SNR with the given mean."""

    def integrand(g):
        return float(awgn_ber(g, order)) * math.exp(-g / mean_snr) / mean_snr

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return val
