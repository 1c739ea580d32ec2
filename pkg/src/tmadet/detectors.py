"""Neumann-series MMSE detectors and the exact Cholesky baseline.

The approximate inverse of ``W`` is the truncated series
``W^{-1}(L) = sum_{n<L} Theta^n X^{-1}`` with ``Theta = I - X^{-1} W``, where
``X`` is an easily inverted part of ``W``:

* ``dns`` -- ``X`` is the main diagonal,
* ``tns`` -- ``X`` is the tridiagonal band, inverted exactly,
* ``tma`` -- ``X`` is the tridiagonal band, inverted by the simplified banded
  scheme and applied as a three-diagonal operator.

``improved:<base>:<L>`` squares the ``Theta`` power at every step so that
``L`` steps realize a ``2^(L-1)``-term partial sum.
"""

import enum
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import matched_filter
from .errors import DimensionMismatch, UnknownMethod
from .linalg import cholesky_solve
from .tridiag import BandedInverse, banded_inverse_alg1, exact_inverse, extract_tridiagonal

__all__ = [
    "Initializer",
    "DetectorSpec",
    "build_initializer",
    "banded_apply",
    "dense_inverse",
    "nse_iterate",
    "nse_partial_sums",
    "improved_nse",
    "estimate_symbols",
    "approximate_inverse",
    "detect",
    "theta_frobenius",
]


class Initializer(enum.Enum):
    DIAGONAL = "dns"
    TRIDIAGONAL_EXACT = "tns"
    TRIDIAGONAL_BANDED = "tma"


@dataclass(frozen=True)
class DetectorSpec:
    """``method`` is ``exact``, ``dns``, ``tns``, ``tma`` or ``improved``.

    ``base`` is only set for ``improved``; ``iterations`` is ``None`` for ``exact``.
    """

    method: str
    iterations: Optional[int] = None
    base: Optional[Initializer] = None

    def __post_init__(self):
        if self.method == "exact":
            return
        if self.method not in ("dns", "tns", "tma", "improved"):
            raise UnknownMethod(f"unknown detector method {self.method!r}")
        if self.iterations is None or self.iterations < 1:
            raise ValueError(f"{self.method} needs iterations >= 1")
        if self.method == "improved" and self.base is None:
            raise ValueError("improved detector needs a base initializer")

    @property
    def initializer(self):
        if self.method == "improved":
            return self.base
        if self.method == "exact":
            return None
        return Initializer(self.method)

    @property
    def label(self):
        if self.method == "exact":
            return "exact"
        if self.method == "improved":
            return f"improved:{self.base.value}:{self.iterations}"
        return f"{self.method}:{self.iterations}"

    @classmethod
    def parse(cls, text):
        """Parse ``exact``, ``dns:4``, ``tma:3``, ``improved:tma:3`` (case-insensitive)."""
        text = text.strip().lower()
        if text in ("exact", "mmse", "cholesky"):
            return cls("exact")
        m = re.fullmatch(r"(dns|tns|tma):(\d+)", text)
        if m:
            return cls(m.group(1), int(m.group(2)))
        m = re.fullmatch(r"improved:(dns|tns|tma):(\d+)", text)
        if m:
            return cls("improved", int(m.group(2)), Initializer(m.group(1)))
        raise UnknownMethod(f"cannot parse detector {text!r}")

    def __str__(self):
        return self.label


def banded_apply(binv, m):
    """Product of a three-diagonal Hermitian band with a dense ``(..., K, M)`` matrix.

    Row ``i`` of the result combines rows ``i-1``, ``i`` and ``i+1`` of ``m``,
    so each output column touches the ``3K - 2`` band coefficients once.
    """
    m = np.asarray(m)
    k = binv.k
    if m.shape[-2] != k:
        raise DimensionMismatch(f"band is {k}x{k}, right factor has {m.shape[-2]} rows")
    out = binv.diag[..., :, None] * m
    out[..., 1:, :] += binv.sub[..., :, None] * m[..., :-1, :]
    out[..., :-1, :] += binv.sup[..., :, None] * m[..., 1:, :]
    return out


def dense_inverse(x_inv):
    return x_inv.dense() if isinstance(x_inv, BandedInverse) else x_inv


def build_initializer(w, kind):
    """Return ``(X^{-1}, Theta)`` for the chosen initializer.

    ``X^{-1}`` is a dense array for ``DIAGONAL`` / ``TRIDIAGONAL_EXACT`` and a
    :class:`BandedInverse` for ``TRIDIAGONAL_BANDED``.
    """
    w = np.asarray(w, dtype=complex)
    kind = Initializer(kind)
    k = w.shape[-1]
    eye = np.eye(k)
    if kind is Initializer.DIAGONAL:
        d = 1.0 / np.diagonal(w, axis1=-2, axis2=-1).real
        x_inv = d[..., :, None] * eye
        theta = eye - d[..., :, None] * w
        return x_inv, theta
    tri = extract_tridiagonal(w)
    if kind is Initializer.TRIDIAGONAL_EXACT:
        x_inv = exact_inverse(tri)
        return x_inv, eye - x_inv @ w
    x_inv = banded_inverse_alg1(tri)
    return x_inv, eye - banded_apply(x_inv, w)


def nse_iterate(x_inv, theta, iterations):
    """``W^{-1}(L)`` from ``W^{-1}(1) = X^{-1}``, ``W^{-1}(L+1) = Theta W^{-1}(L) + X^{-1}``."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    base = dense_inverse(x_inv)
    cur = base
    for _ in range(iterations - 1):
        cur = theta @ cur + base
    return cur


def improved_nse(x_inv, w, iterations):
    """Order-doubling series: ``W_L = Theta^(2^(L-2)) W_{L-1} + W_{L-1}``."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    base = dense_inverse(x_inv)
    theta = np.eye(base.shape[-1]) - base @ w
    cur = base
    power = theta
    for _ in range(iterations - 1):
        cur = power @ cur + cur
        power = power @ power
    return cur


def nse_partial_sums(x_inv, theta, y_hat, max_iterations):
    """Symbol estimates ``W^{-1}(L) y_hat`` for every ``L = 1..max_iterations``.

    Runs the vector form ``x_{L+1} = Theta x_L + X^{-1} y_hat`` of the same
    recursion; returns shape ``(max_iterations, ..., K)``.
    """
    if isinstance(x_inv, BandedInverse):
        start = banded_apply(x_inv, y_hat[..., None])[..., 0]
    else:
        start = np.einsum("...ij,...j->...i", x_inv, y_hat)
    out = np.empty((max_iterations,) + start.shape, dtype=complex)
    cur = start
    out[0] = cur
    for n in range(1, max_iterations):
        cur = np.einsum("...ij,...j->...i", theta, cur) + start
        out[n] = cur
    return out


def estimate_symbols(w_inv, y_hat):
    w_inv = np.asarray(w_inv)
    y_hat = np.asarray(y_hat)
    if w_inv.shape[-1] != y_hat.shape[-1]:
        raise DimensionMismatch(f"inverse is {w_inv.shape[-2:]}, vector has {y_hat.shape[-1]} entries")
    return np.einsum("...ij,...j->...i", w_inv, y_hat)


def approximate_inverse(spec, w):
    """The dense inverse (exact or approximate) that ``spec`` applies to ``W``."""
    w = np.asarray(w, dtype=complex)
    if spec.method == "exact":
        k = w.shape[-1]
        return cholesky_solve(w, np.broadcast_to(np.eye(k, dtype=complex), w.shape))
    x_inv, theta = build_initializer(w, spec.initializer)
    if spec.method == "improved":
        return improved_nse(x_inv, w, spec.iterations)
    return nse_iterate(x_inv, theta, spec.iterations)


def detect(spec, real, y):
    """Matched filter, (approximate) inversion and symbol estimate for one received vector."""
    y_hat = matched_filter(real, y)
    if spec.method == "exact":
        return cholesky_solve(real.w, y_hat)
    return estimate_symbols(approximate_inverse(spec, real.w), y_hat)


def theta_frobenius(theta):
    return np.sqrt(np.sum(np.abs(theta) ** 2, axis=(-2, -1)))
