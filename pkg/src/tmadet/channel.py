"""Kronecker-model channel generation and MMSE filtering-matrix assembly.

The uplink model is ``y = R^{1/2} H Sigma^{1/2} s + n`` with a receive-side
exponential correlation matrix ``R``, i.i.d. CN(0, 1) fast fading ``H`` and
per-user large-scale gains ``Sigma``. The MMSE filtering matrix is
``W = Gamma^H Gamma + eta2 I`` with ``Gamma = R^{1/2} H Sigma^{1/2}``.

All samplers take either an integer seed or a ``numpy.random.Generator``.
Passing ``size`` draws a batch of independent realizations stacked along a
leading axis.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch
from .linalg import hermitian_product, hermitian_sqrt, hermitize

__all__ = [
    "CorrelationSpec",
    "PathLossSpec",
    "ChannelRealization",
    "build_correlation_matrix",
    "correlation_frobenius_sq",
    "sample_fast_fading",
    "complex_normal",
    "assemble_realization",
    "received_signal",
    "matched_filter",
]


@dataclass(frozen=True)
class CorrelationSpec:
    """Receive correlation ``r_lm = (zeta e^{j w_lm})^{|l-m|}``.

    ``phase_mode`` is ``"zero"`` (all phases 0) or ``"random"``, which draws
    every ``w_lm`` uniformly on ``[0, 2pi)`` once from ``phase_seed``.
    """

    n: int
    zeta: float
    phase_mode: str = "zero"
    phase_seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"antenna count must be >= 1, got {self.n}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta}")
        if self.phase_mode not in ("zero", "random"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")


@dataclass(frozen=True)
class PathLossSpec:
    sigma: tuple

    def __post_init__(self):
        sigma = tuple(float(s) for s in self.sigma)
        if not sigma or min(sigma) <= 0:
            raise ValueError("path-loss gains must be positive")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def uniform(cls, k):
        return cls((1.0,) * k)

    @property
    def k(self):
        return len(self.sigma)


@dataclass(frozen=True)
class ChannelRealization:
    """One channel draw, or a batch of draws stacked along leading axes.

    Shapes: ``h`` and ``gamma`` are ``(..., N, K)``, ``w`` is ``(..., K, K)``;
    ``r_sqrt`` (``N x N``) and ``sigma_sqrt`` (length ``K``) are shared by the batch.
    """

    h: np.ndarray
    r_sqrt: np.ndarray
    sigma_sqrt: np.ndarray
    eta2: float
    gamma: np.ndarray
    w: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.gamma.shape[-2]

    @property
    def k(self):
        return self.gamma.shape[-1]

    @property
    def batch_shape(self):
        return self.gamma.shape[:-2]


def build_correlation_matrix(spec):
    n, zeta = spec.n, spec.zeta
    lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    mag = np.power(zeta, lag)  # 0**0 == 1 keeps the diagonal at one
    if spec.phase_mode == "zero":
        return hermitize(mag.astype(complex))
    rng = np.random.default_rng(spec.phase_seed)
    omega = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))
    # upper triangle (l <= m) defined directly, lower is its conjugate
    upper = np.triu(mag * np.exp(1j * omega * lag), 1)
    r = np.conj(upper.T) + np.eye(n)
    return hermitize(r)


def correlation_frobenius_sq(n, zeta):
    """``||R(zeta)||_F^2 = sum_{l,m} zeta^{2|l-m|}`` in closed form over lags."""
    lags = np.arange(1, n)
    return float(n + 2.0 * np.sum((n - lags) * zeta ** (2.0 * lags)))


def complex_normal(rng, shape, variance=1.0):
    """Circularly symmetric CN(0, variance): independent real/imag parts of variance/2."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_fast_fading(n, k, rng_seed=None, size=None):
    if n < 1 or k < 1:
        raise ValueError("N and K must be >= 1")
    rng = np.random.default_rng(rng_seed)
    lead = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    return complex_normal(rng, lead + (n, k))


def assemble_realization(corr, loss, eta2, rng_seed=None, size=None, r_sqrt=None):
    """Draw ``H`` and build ``Gamma`` and ``W`` for the given correlation and path loss.

    ``r_sqrt`` may be passed to reuse a precomputed ``R^{1/2}`` across calls.
    """
    if eta2 < 0:
        raise ValueError(f"noise variance must be non-negative, got {eta2}")
    if r_sqrt is None:
        r_sqrt = hermitian_sqrt(build_correlation_matrix(corr))
    sigma_sqrt = np.sqrt(np.asarray(loss.sigma, dtype=float))
    h = sample_fast_fading(corr.n, loss.k, rng_seed, size)
    if corr.zeta == 0.0 and corr.phase_mode == "zero":
        rh = h
    else:
        rh = r_sqrt @ h
    gamma = rh * sigma_sqrt
    w = hermitian_product(gamma)
    idx = np.arange(loss.k)
    w[..., idx, idx] += eta2
    return ChannelRealization(h=h, r_sqrt=r_sqrt, sigma_sqrt=sigma_sqrt, eta2=float(eta2), gamma=gamma, w=w)


def received_signal(real, s, rng_seed=None):
    """``y = Gamma s + n`` with ``n ~ CN(0, eta2 I)``."""
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != real.k:
        raise DimensionMismatch(f"symbol vector has {s.shape[-1]} entries, channel has K={real.k}")
    rng = np.random.default_rng(rng_seed)
    clean = np.einsum("...nk,...k->...n", real.gamma, s)
    return clean + complex_normal(rng, clean.shape, real.eta2)


def matched_filter(real, y):
    """``Gamma^H y``."""
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != real.n:
        raise DimensionMismatch(f"received vector has {y.shape[-1]} entries, channel has N={real.n}")
    return np.einsum("...nk,...n->...k", np.conj(real.gamma), y)
