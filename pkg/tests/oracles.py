"""Independent reference implementations used only by the tests.

Everything here is written as plain scalar loops or leans on numpy's dense
LAPACK routines, so it shares no code path with the package under test.
"""

import math

import numpy as np


def lp_norm_loop(v, p):
    total = 0.0
    for x in v:
        total += abs(x) ** p
    return total ** (1.0 / p)


def frobenius_loop(a):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            total += abs(a[i, j]) ** 2
    return math.sqrt(total)


def gram_loop(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((k, m), dtype=complex)
    for i in range(k):
        for j in range(m):
            acc = 0j
            for r in range(n):
                acc += np.conj(a[r, i]) * b[r, j]
            out[i, j] = acc
    return out


def matvec_loop(m, v):
    out = np.zeros(m.shape[0], dtype=complex)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            out[i] += m[i, j] * v[j]
    return out


def correlation_frob_sq_loop(n, zeta):
    total = 0.0
    for l in range(n):
        for m in range(n):
            total += zeta ** (2 * abs(l - m))
    return total


def tridiag_dense(b, a):
    k = len(b)
    t = np.zeros((k, k), dtype=complex)
    for i in range(k):
        t[i, i] = b[i]
    for i in range(1, k):
        t[i, i - 1] = a[i - 1]
        t[i - 1, i] = np.conj(a[i - 1])
    return t


def z_recursion(b, a):
    """Raw leading principal minors ``z_0 = 1, z_1 = b_1, z_i = b_i z_{i-1} - |a_i|^2 z_{i-2}``."""
    z = [1.0, float(b[0])]
    for i in range(1, len(b)):
        z.append(b[i] * z[-1] - abs(a[i - 1]) ** 2 * z[-2])
    return z


def simplified_inverse_closed_form(b, a):
    """Three-band simplified inverse from raw minors.

    ``q_i = z_i / z_{i-1}``, ``p_i = q_i - |a_{i+1}|^2 / b_{i+1}`` (``p_K = q_K``),
    ``phi_ii = 1 / p_i`` and ``phi_{i,i-1} = -a_i / (q_{i-1} p_i)``.
    """
    k = len(b)
    z = z_recursion(b, a)
    q = [z[i + 1] / z[i] for i in range(k)]
    p = [q[i] - (abs(a[i]) ** 2 / b[i + 1] if i < k - 1 else 0.0) for i in range(k)]
    diag = np.array([1.0 / x for x in p], dtype=complex)
    sub = np.array([-a[i - 1] / (q[i - 1] * p[i]) for i in range(1, k)], dtype=complex)
    return diag, sub, np.array(q), np.array(p), np.array(z)


def explicit_power_sum(x_inv, theta, terms):
    out = np.zeros_like(x_inv, dtype=complex)
    power = np.eye(x_inv.shape[-1], dtype=complex)
    for _ in range(terms):
        out = out + power @ x_inv
        power = power @ theta
    return out


def nearest_point_bits(symbols, points, labels_bits):
    """Brute-force minimum-distance detection over the whole constellation."""
    idx = np.argmin(np.abs(symbols[:, None] - points[None, :]), axis=1)
    return labels_bits[idx].reshape(-1)


def random_hpd(rng, k, n=None, eta2=0.5):
    n = 4 * k if n is None else n
    g = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2)
    return g.conj().T @ g + eta2 * np.eye(k)


def random_dominant_tridiag(rng, k, scale=0.3):
    """Diagonal entries near ``1``-ish scale with small complex off-diagonals."""
    b = rng.uniform(2.0, 4.0, size=k)
    a = scale * (rng.standard_normal(k - 1) + 1j * rng.standard_normal(k - 1))
    return b, a
