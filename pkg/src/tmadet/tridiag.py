"""Inversion of Hermitian tridiagonal matrices.

A Hermitian tridiagonal matrix is stored as its real main diagonal ``b``
(length K) and its sub-diagonal ``a`` (length K-1, ``a[i-2] = w_{i,i-1}`` in
1-based terms); the super-diagonal is ``conj(a)``. Leading batch dimensions
are carried through every routine, so the loops below run over the matrix
index only.

Three inverses are provided:

* :func:`exact_inverse` -- the full dense inverse from the forward/backward
  second-order recurrences, evaluated through their bounded ratios.
* :func:`banded_inverse_alg1` -- the simplified banded inverse that keeps only
  the three central diagonals and replaces the backward recurrence by the
  bare diagonal (``y_j ~ b_j y_{j+1}``).
* :func:`banded_inverse_alg2` -- the same arithmetic scheduled on a single
  folded divide/multiply-subtract unit, two clocks per index.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDivision, DegenerateRecurrence, TooSmall
from .linalg import hermitize

__all__ = [
    "TridiagonalHermitian",
    "BandedInverse",
    "RecurrenceState",
    "UNDERFLOW_GUARD",
    "extract_tridiagonal",
    "exact_inverse",
    "banded_inverse_alg1",
    "banded_inverse_alg2",
    "folded_schedule",
    "qp_recurrence",
    "p_attenuation_statistic",
    "step2_error_percentage",
]

UNDERFLOW_GUARD = 1e-300


def _band_dense(diag, sub, dtype=complex):
    k = diag.shape[-1]
    out = np.zeros(diag.shape + (k,), dtype=dtype)
    idx = np.arange(k)
    out[..., idx, idx] = diag
    out[..., idx[1:], idx[:-1]] = sub
    out[..., idx[:-1], idx[1:]] = np.conj(sub)
    return out


@dataclass(frozen=True)
class TridiagonalHermitian:
    b: np.ndarray  # (..., K) real
    a: np.ndarray  # (..., K-1) complex, sub-diagonal

    @property
    def k(self):
        return self.b.shape[-1]

    @property
    def c(self):
        """Super-diagonal ``c_i = conj(a_{i+1})``."""
        return np.conj(self.a)

    def dense(self):
        return _band_dense(self.b, self.a)


@dataclass(frozen=True)
class BandedInverse:
    """Three-diagonal Hermitian band of an (approximate) inverse."""

    diag: np.ndarray  # (..., K)
    sub: np.ndarray  # (..., K-1), entry (i, i-1)

    @property
    def k(self):
        return self.diag.shape[-1]

    @property
    def sup(self):
        return np.conj(self.sub)

    def dense(self):
        return _band_dense(self.diag, self.sub)


@dataclass(frozen=True)
class RecurrenceState:
    z: np.ndarray  # (..., K+1), z_0 .. z_K
    q: np.ndarray  # (..., K), q_i = z_i / z_{i-1}
    p: np.ndarray  # (..., K), 1 / p_i is the simplified diagonal of the inverse


def extract_tridiagonal(w):
    w = np.asarray(w)
    k = w.shape[-1]
    if k < 2:
        raise TooSmall(f"tridiagonal extraction needs K >= 2, got {k}")
    idx = np.arange(k)
    b = w[..., idx, idx].real.copy()
    a = w[..., idx[1:], idx[:-1]].astype(complex)
    return TridiagonalHermitian(b=b, a=a)


def _guard(x, what, index, exc=DegenerateDivision):
    bad = ~(np.abs(x) >= UNDERFLOW_GUARD)
    if np.any(bad):
        raise exc(f"{what} vanished at index {index}", index)


def _forward_ratios(b, a2):
    """``q_i = b_i - |a_i|^2 / q_{i-1}``, ``q_1 = b_1`` (``q_i = z_i / z_{i-1}``)."""
    k = b.shape[-1]
    q = np.empty(b.shape, dtype=float)
    q[..., 0] = b[..., 0]
    _guard(q[..., 0], "q", 1, DegenerateRecurrence)
    for i in range(1, k):
        q[..., i] = b[..., i] - a2[..., i - 1] / q[..., i - 1]
        _guard(q[..., i], "q", i + 1, DegenerateRecurrence)
    return q


def _backward_ratios(b, a2):
    """``r_j = b_j - |a_{j+1}|^2 / r_{j+1}``, ``r_K = b_K`` (``r_j = y_j / y_{j+1}``)."""
    k = b.shape[-1]
    r = np.empty(b.shape, dtype=float)
    r[..., k - 1] = b[..., k - 1]
    _guard(r[..., k - 1], "y ratio", k, DegenerateRecurrence)
    for j in range(k - 2, -1, -1):
        r[..., j] = b[..., j] - a2[..., j] / r[..., j + 1]
        _guard(r[..., j], "y ratio", j + 1, DegenerateRecurrence)
    return r


def exact_inverse(t):
    """Full inverse of a Hermitian tridiagonal matrix.

    The diagonal uses both recurrences,
    ``phi_ii = 1 / (b_i - |a_i|^2 z_{i-2}/z_{i-1} - |a_{i+1}|^2 y_{i+2}/y_{i+1})``,
    and each column is then filled downwards with
    ``phi_ij = -a_i (y_{i+1}/y_i) phi_{i-1,j}`` for ``i > j``. The upper
    triangle is the conjugate mirror.
    """
    b = np.asarray(t.b, dtype=float)
    a = np.asarray(t.a, dtype=complex)
    k = b.shape[-1]
    a2 = np.abs(a) ** 2
    q = _forward_ratios(b, a2)
    r = _backward_ratios(b, a2)

    denom = b.copy()
    denom[..., 1:] -= a2 / q[..., :-1]
    denom[..., :-1] -= a2 / r[..., 1:]
    for i in range(k):
        _guard(denom[..., i], "diagonal denominator", i + 1, DegenerateRecurrence)
    diag = 1.0 / denom

    # attenuation of each step down a column: -a_i / r_i
    step = -a / r[..., 1:]
    out = np.zeros(b.shape + (k,), dtype=complex)
    for j in range(k):
        out[..., j, j] = diag[..., j]
        for i in range(j + 1, k):
            out[..., i, j] = step[..., i - 1] * out[..., i - 1, j]
    return hermitize(out)


def banded_inverse_alg1(t):
    """Simplified banded inverse, two-pass form.

    Pass one runs the forward elimination (``ratio``, the updated diagonal
    ``q_i`` and the look-ahead ``p_i = q_i - |a_{i+1}|^2 / b_{i+1}``); pass two
    forms ``phi_ii = 1/p_i`` and ``phi_{i,i-1} = -ratio_i / p_i``.
    """
    b = np.asarray(t.b, dtype=float)
    a = np.asarray(t.a, dtype=complex)
    k = b.shape[-1]
    c = np.conj(a)
    # working copies of the three bands; wd is mutated in place as in hardware
    wd = b.astype(complex)
    ws = a.copy()  # w_{i,i-1}, overwritten by p_i
    phi_sub = np.empty_like(a)

    _guard(wd[..., 1], "w_22", 1, DegenerateDivision)
    p1 = wd[..., 0] - (ws[..., 0] * c[..., 0]) / wd[..., 1]
    _guard(p1, "phi_11 denominator", 1)
    phi_11 = 1.0 / p1

    for i in range(1, k):
        _guard(wd[..., i - 1], "w_(i-1)(i-1)", i + 1)
        ratio = ws[..., i - 1] / wd[..., i - 1]
        phi_sub[..., i - 1] = -ratio
        wd[..., i] = wd[..., i] - ratio * c[..., i - 1]
        if i + 1 < k:
            _guard(wd[..., i + 1], "w_(i+1)(i+1)", i + 1)
            ws[..., i - 1] = wd[..., i] - (a[..., i] * c[..., i]) / wd[..., i + 1]
        else:
            ws[..., i - 1] = wd[..., i]

    diag = np.empty(b.shape, dtype=complex)
    diag[..., 0] = phi_11
    for i in range(1, k):
        _guard(ws[..., i - 1], "p_i", i + 1)
        diag[..., i] = 1.0 / ws[..., i - 1]
        phi_sub[..., i - 1] = phi_sub[..., i - 1] / ws[..., i - 1]
    return BandedInverse(diag=diag, sub=phi_sub)


def folded_schedule(k):
    """Clock-by-clock schedule of the folded unit: ``(clock, i, phase)`` tuples.

    Index ``i`` runs 2..K and occupies two consecutive clocks; phase 1 forms
    ``ratio1`` and the diagonal update, phase 2 forms ``ratio2`` and ``p_i``.
    """
    return [(2 * (i - 2) + ph, i, ph) for i in range(2, k + 1) for ph in (1, 2)]


def _fold_unit(num, den, base, mul):
    """Shared divide then multiply-subtract: returns ``(num/den, base - (num/den)*mul)``."""
    ratio = num / den
    return ratio, base - ratio * mul


def banded_inverse_alg2(t):
    """Folded schedule of :func:`banded_inverse_alg1` on one reused unit.

    Equal to :func:`banded_inverse_alg1` up to floating-point reassociation of the look-ahead
    product ``(c_i / b_{i+1}) a_{i+1}``.
    """
    b = np.asarray(t.b, dtype=float)
    a = np.asarray(t.a, dtype=complex)
    k = b.shape[-1]
    c = np.conj(a)
    wd = b.astype(complex)
    ws = a.copy()
    phi_sub = np.empty_like(a)

    _guard(wd[..., 1], "w_22", 1)
    p1 = wd[..., 0] - (ws[..., 0] * c[..., 0]) / wd[..., 1]
    _guard(p1, "phi_11 denominator", 1)
    phi_11 = 1.0 / p1

    ratio1 = None
    for _clk, i, phase in folded_schedule(k):
        s = i - 1  # 0-based row index
        if phase == 1:
            _guard(wd[..., s - 1], "w_(i-1)(i-1)", i)
            ratio1, wd[..., s] = _fold_unit(ws[..., s - 1], wd[..., s - 1], wd[..., s], c[..., s - 1])
        else:
            phi_sub[..., s - 1] = -ratio1
            if i < k:
                _guard(wd[..., s + 1], "w_(i+1)(i+1)", i)
                _, ws[..., s - 1] = _fold_unit(c[..., s], wd[..., s + 1], wd[..., s], a[..., s])
            else:
                ws[..., s - 1] = wd[..., s]

    diag = np.empty(b.shape, dtype=complex)
    diag[..., 0] = phi_11
    for i in range(1, k):
        _guard(ws[..., i - 1], "p_i", i + 1)
        diag[..., i] = 1.0 / ws[..., i - 1]
        phi_sub[..., i - 1] = phi_sub[..., i - 1] / ws[..., i - 1]
    return BandedInverse(diag=diag, sub=phi_sub)


def qp_recurrence(t):
    """Ratio recurrences ``q`` and ``p``; ``z`` is rebuilt as the running product of ``q``."""
    b = np.asarray(t.b, dtype=float)
    a2 = np.abs(np.asarray(t.a)) ** 2
    q = _forward_ratios(b, a2)
    p = q.copy()
    p[..., :-1] -= a2 / b[..., 1:]
    z = np.concatenate([np.ones(b.shape[:-1] + (1,)), np.cumprod(q, axis=-1)], axis=-1)
    return RecurrenceState(z=z, q=q, p=p)


def p_attenuation_statistic(t):
    """Mean magnitude of the column attenuation ``|a_i z_{i-1} / z_i| = |a_i| / |q_i|``.

    Averaged over ``i = 2..K`` and over every matrix in the batch.
    """
    b = np.asarray(t.b, dtype=float)
    a = np.asarray(t.a, dtype=complex)
    q = _forward_ratios(b, np.abs(a) ** 2)
    return float(np.mean(np.abs(a) / np.abs(q[..., 1:])))


def step2_error_percentage(t):
    """Relative l1 gap between simplified and exact inverse diagonals, in percent.

    Computed per matrix as ``| ||phi~||_1 - ||phi||_1 | / ||phi||_1`` and
    averaged over the batch.
    """
    exact = np.diagonal(exact_inverse(t), axis1=-2, axis2=-1)
    approx = banded_inverse_alg1(t).diag
    l1_exact = np.sum(np.abs(exact), axis=-1)
    l1_approx = np.sum(np.abs(approx), axis=-1)
    return float(np.mean(np.abs(l1_approx - l1_exact) / l1_exact) * 100.0)
