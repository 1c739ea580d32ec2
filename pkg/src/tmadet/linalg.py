"""Small complex linear-algebra kernels.

Every routine works on numpy arrays and accepts leading batch dimensions
where that makes sense (``(..., K, K)`` matrices, ``(..., K)`` vectors), so
that whole Monte-Carlo ensembles can be pushed through one call.

Hermitian matrices follow a lower-triangle-authoritative convention: the
upper triangle is always the exact conjugate mirror of the lower one.
"""

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    EmptyVector,
    InvalidP,
    NotPositiveDefinite,
    NotPSD,
    OffsetOutOfRange,
)

__all__ = [
    "lp_norm",
    "frobenius_norm",
    "diag_band",
    "band_l1_norm",
    "band_matrix",
    "hermitize",
    "hermitian_product",
    "cholesky_factor",
    "cholesky_solve",
    "hermitian_sqrt",
    "PD_TOLERANCE",
    "PSD_TOLERANCE",
]

# Cholesky pivot <= PD_TOLERANCE * max diagonal counts as singular.
PD_TOLERANCE = 1e-12
# Eigenvalues in [-PSD_TOLERANCE * ||R||_F, 0) are clamped to zero.
PSD_TOLERANCE = 1e-8


def lp_norm(v, p):
    """Return ``(sum |v_i|^p)^(1/p)`` of a complex vector."""
    v = np.asarray(v)
    if v.size == 0:
        raise EmptyVector("lp_norm of an empty vector")
    if not p >= 1:
        raise InvalidP(f"p must be >= 1, got {p!r}")
    mag = np.abs(v.ravel())
    if np.isinf(p):
        return float(mag.max())
    return float(np.sum(mag**p) ** (1.0 / p))


def frobenius_norm(a):
    a = np.asarray(a)
    if a.size == 0:
        raise EmptyMatrix("frobenius_norm of an empty matrix")
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def _check_offset(a, k):
    rows, cols = a.shape[-2:]
    if abs(k) >= min(rows, cols):
        raise OffsetOutOfRange(f"offset {k} out of range for {rows}x{cols} matrix")


def diag_band(a, k):
    """Entries ``a[i, j]`` with ``i - j == k`` (``k > 0`` is below the main diagonal).

    Batched input returns shape ``(..., K - |k|)``.
    """
    a = np.asarray(a)
    _check_offset(a, k)
    return np.diagonal(a, offset=-k, axis1=-2, axis2=-1).copy()


def band_l1_norm(a, k):
    return float(np.sum(np.abs(diag_band(a, k))))


def band_matrix(a, k):
    """The matrix holding only band ``k`` of ``a`` (zeros elsewhere)."""
    a = np.asarray(a)
    _check_offset(a, k)
    rows, cols = a.shape[-2:]
    i, j = np.indices((rows, cols))
    return np.where(i - j == k, a, 0)


def hermitize(a):
    """Mirror the lower triangle of ``a`` into the upper one, conjugated.

    Diagonal imaginary parts are dropped, so the result satisfies
    ``out == out.conj().T`` bit for bit.
    """
    a = np.asarray(a, dtype=complex)
    lower = np.tril(a, -1)
    out = lower + np.conj(np.swapaxes(lower, -1, -2))
    idx = np.arange(a.shape[-1])
    out[..., idx, idx] = a[..., idx, idx].real
    return out


def hermitian_product(a, b=None):
    """Gram product ``a^H b`` (``a^H a`` when ``b`` is omitted), stored exactly Hermitian.

    The lower triangle is taken from the dense product and mirrored, so the
    result is meaningful when ``a^H b`` is Hermitian, as for ``b = a``.
    """
    a = np.asarray(a, dtype=complex)
    b = a if b is None else np.asarray(b, dtype=complex)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionMismatch("hermitian_product expects matrices")
    if a.shape[-2] != b.shape[-2]:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape[-2]} vs {b.shape[-2]}")
    return hermitize(np.conj(np.swapaxes(a, -1, -2)) @ b)


def cholesky_factor(w):
    """Lower-triangular ``L`` with ``L @ L^H == w`` and a real positive diagonal.

    Only the lower triangle of ``w`` is read. Raises NotPositiveDefinite when a
    pivot drops to ``PD_TOLERANCE`` times the largest diagonal entry.
    """
    w = np.asarray(w, dtype=complex)
    k = w.shape[-1]
    if w.ndim < 2 or w.shape[-2] != k:
        raise DimensionMismatch(f"cholesky_factor needs a square matrix, got {w.shape}")
    diag = w[..., np.arange(k), np.arange(k)].real
    scale = np.max(diag, axis=-1)
    low = np.zeros_like(w)
    for j in range(k):
        row = low[..., j, :j]
        pivot = w[..., j, j].real - np.sum(np.abs(row) ** 2, axis=-1)
        if np.any(pivot <= PD_TOLERANCE * scale) or np.any(~np.isfinite(pivot)):
            raise NotPositiveDefinite(f"non-positive pivot at column {j}")
        root = np.sqrt(pivot)
        low[..., j, j] = root
        if j + 1 < k:
            below = w[..., j + 1 :, j] - np.einsum("...ij,...j->...i", low[..., j + 1 :, :j], np.conj(row))
            low[..., j + 1 :, j] = below / root[..., None]
    return low


def _forward(low, b):
    k = low.shape[-1]
    x = np.zeros(np.broadcast_shapes(low.shape[:-2], b.shape[:-2]) + b.shape[-2:], dtype=complex)
    for i in range(k):
        acc = b[..., i, :] - np.einsum("...j,...jm->...m", low[..., i, :i], x[..., :i, :])
        x[..., i, :] = acc / low[..., i, i][..., None]
    return x


def _backward_h(low, b):
    # solves L^H x = b
    k = low.shape[-1]
    x = np.zeros(np.broadcast_shapes(low.shape[:-2], b.shape[:-2]) + b.shape[-2:], dtype=complex)
    for i in range(k - 1, -1, -1):
        col = np.conj(low[..., i + 1 :, i])
        acc = b[..., i, :] - np.einsum("...j,...jm->...m", col, x[..., i + 1 :, :])
        x[..., i, :] = acc / low[..., i, i][..., None].real
    return x


def cholesky_solve(w, b):
    """Solve ``w x = b`` for Hermitian positive-definite ``w``.

    ``b`` is either a vector (``w.ndim - 1`` dimensions) or a block of
    right-hand-side columns with the same rank as ``w``.
    """
    w = np.asarray(w, dtype=complex)
    b = np.asarray(b, dtype=complex)
    k = w.shape[-1]
    vector = b.ndim == w.ndim - 1
    rhs = b[..., None] if vector else b
    if rhs.shape[-2] != k:
        raise DimensionMismatch(f"right-hand side has {rhs.shape[-2]} rows, matrix is {k}x{k}")
    low = cholesky_factor(w)
    x = _backward_h(low, _forward(low, rhs))
    return x[..., 0] if vector else x


def hermitian_sqrt(r):
    """Hermitian PSD square root through an eigendecomposition.

    Slightly negative eigenvalues (rank-deficient inputs such as the fully
    correlated matrix) are clamped to zero; anything below
    ``-PSD_TOLERANCE * ||r||_F`` raises NotPSD.
    """
    r = np.asarray(r, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionMismatch(f"hermitian_sqrt needs a square matrix, got {r.shape}")
    sym = 0.5 * (r + r.conj().T)
    vals, vecs = np.linalg.eigh(sym)
    floor = -PSD_TOLERANCE * np.linalg.norm(sym)
    if vals.min() < floor:
        raise NotPSD(f"eigenvalue {vals.min():.3e} below tolerance {floor:.3e}")
    vals = np.clip(vals, 0.0, None)
    return hermitize((vecs * np.sqrt(vals)) @ vecs.conj().T)
