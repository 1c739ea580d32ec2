import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_dominant_tridiag, simplified_inverse_closed_form, tridiag_dense, z_recursion
from tmadet.analysis import sample_w
from tmadet.errors import DegenerateDivision, DegenerateRecurrence, TooSmall
from tmadet.linalg import cholesky_solve, hermitize
from tmadet.tridiag import (
    TridiagonalHermitian,
    banded_inverse_alg1,
    banded_inverse_alg2,
    exact_inverse,
    extract_tridiagonal,
    folded_schedule,
    p_attenuation_statistic,
    qp_recurrence,
    step2_error_percentage,
)

# Integer example b = [4, 5, 6, 7], a = [1, 2, 1]: inverse worked out in exact
# rational arithmetic (Gauss-Jordan over fractions), frozen here.
INT_B = np.array([4.0, 5.0, 6.0, 7.0])
INT_A = np.array([1.0, 2.0, 1.0])
INT_INV_DIAG = np.array([177, 164, 133, 98]) / 667
INT_INV_SUB = np.array([-41, -56, -19]) / 667
INT_INV_30 = -2 / 667
INT_SIMPLIFIED_DIAG = np.array([5 / 19, 12 / 49, 133 / 667, 98 / 667])
INT_SIMPLIFIED_SUB = np.array([-3 / 49, -56 / 667, -19 / 667])


def _t(b, a):
    return TridiagonalHermitian(b=np.asarray(b, float), a=np.asarray(a, complex))


def test_extract_identity():
    t = extract_tridiagonal(np.eye(4))
    np.testing.assert_array_equal(t.b, np.ones(4))
    np.testing.assert_array_equal(t.a, np.zeros(3))
    with pytest.raises(TooSmall):
        extract_tridiagonal(np.eye(1))


def test_extract_reassembles_bands(rng):
    g = rng.standard_normal((9, 6)) + 1j * rng.standard_normal((9, 6))
    w = hermitize(g.conj().T @ g)
    dense = extract_tridiagonal(w).dense()
    i, j = np.indices((6, 6))
    np.testing.assert_array_equal(dense, np.where(np.abs(i - j) <= 1, w, 0))


def test_exact_inverse_small_cases():
    np.testing.assert_allclose(exact_inverse(_t([2.0, 4.0, 5.0], [0, 0])), np.diag([0.5, 0.25, 0.2]))
    np.testing.assert_allclose(exact_inverse(_t([2.0, 2.0], [1.0])), np.array([[2, -1], [-1, 2]]) / 3, atol=1e-15)


def test_exact_inverse_frozen_integer_example():
    inv = exact_inverse(_t(INT_B, INT_A))
    np.testing.assert_allclose(np.diagonal(inv), INT_INV_DIAG, rtol=1e-14)
    np.testing.assert_allclose(np.diagonal(inv, -1), INT_INV_SUB, rtol=1e-14)
    assert abs(inv[3, 0] - INT_INV_30) < 1e-15


def test_exact_inverse_matches_dense_solve(rng):
    for _ in range(20):
        b, a = random_dominant_tridiag(rng, 8)
        t = _t(b, a)
        dense = tridiag_dense(b, a)
        inv = exact_inverse(t)
        oracle = np.stack([cholesky_solve(dense, e) for e in np.eye(8)], axis=1)
        assert np.max(np.abs(inv - oracle)) < 1e-9
        np.testing.assert_array_equal(inv, inv.conj().T)


def test_exact_inverse_residual_k32(rng):
    w = sample_w(512, 32, 0.3, 5, seed=rng)
    t = extract_tridiagonal(w)
    inv = exact_inverse(t)
    eye = np.eye(32)
    for m in range(5):
        assert np.linalg.norm(t.dense()[m] @ inv[m] - eye) < 1e-9


def test_alg1_diagonal_input():
    out = banded_inverse_alg1(_t([2.0, 4.0, 8.0], [0, 0]))
    np.testing.assert_allclose(out.diag, [0.5, 0.25, 0.125])
    np.testing.assert_array_equal(out.sub, 0)
    out2 = banded_inverse_alg2(_t([2.0, 4.0, 8.0], [0, 0]))
    np.testing.assert_allclose(out2.diag, out.diag)
    np.testing.assert_array_equal(out2.sub, 0)


def test_alg1_frozen_integer_example():
    out = banded_inverse_alg1(_t(INT_B, INT_A))
    np.testing.assert_allclose(out.diag.real, INT_SIMPLIFIED_DIAG, rtol=1e-14)
    np.testing.assert_allclose(out.sub.real, INT_SIMPLIFIED_SUB, rtol=1e-14)
    # the last two diagonal entries coincide with the exact inverse
    np.testing.assert_allclose(out.diag.real[2:], INT_INV_DIAG[2:], rtol=1e-14)


def test_alg1_matches_closed_form_oracle(rng):
    for k in range(2, 17):
        b, a = random_dominant_tridiag(rng, k)
        diag, sub, *_ = simplified_inverse_closed_form(b, a)
        out = banded_inverse_alg1(_t(b, a))
        assert np.max(np.abs(out.diag - diag)) < 1e-12
        assert np.max(np.abs(out.sub - sub)) < 1e-12
        np.testing.assert_array_equal(out.sup, np.conj(out.sub))


def test_alg2_equals_alg1(rng):
    for k in range(2, 17):
        b, a = random_dominant_tridiag(rng, k)
        o1, o2 = banded_inverse_alg1(_t(b, a)), banded_inverse_alg2(_t(b, a))
        assert np.max(np.abs(o1.diag - o2.diag)) < 1e-15
        assert np.max(np.abs(o1.sub - o2.sub)) < 1e-15


def test_folded_schedule_two_clocks_per_index():
    sched = folded_schedule(8)
    assert len(sched) == 2 * 7
    per_index = {}
    for clock, i, phase in sched:
        per_index.setdefault(i, []).append((clock, phase))
    assert sorted(per_index) == list(range(2, 9))
    for i, steps in per_index.items():
        assert [p for _, p in steps] == [1, 2]
        assert steps[1][0] == steps[0][0] + 1
    assert [c for c, _, _ in sched] == list(range(1, len(sched) + 1))


def test_qp_recurrence_diagonal():
    st_ = qp_recurrence(_t([3.0, 5.0, 7.0], [0, 0]))
    np.testing.assert_array_equal(st_.q, [3.0, 5.0, 7.0])
    np.testing.assert_array_equal(st_.p, [3.0, 5.0, 7.0])


def test_qp_recurrence_matches_raw_minors(rng):
    b, a = random_dominant_tridiag(rng, 5)
    st_ = qp_recurrence(_t(b, a))
    z = np.array(z_recursion(b, a))
    np.testing.assert_allclose(st_.z, z, rtol=1e-12)
    for i in range(1, 6):
        assert abs(st_.q[i - 1] * z[i - 1] - z[i]) < 1e-12 * abs(z[i])
    out = banded_inverse_alg1(_t(b, a))
    assert np.max(np.abs(1.0 / st_.p - out.diag)) < 1e-12


def test_degenerate_inputs_raise():
    with pytest.raises(DegenerateRecurrence) as info:
        exact_inverse(_t([1.0, 1.0, 1.0], [1.0, 0.5]))
    assert info.value.index == 2
    with pytest.raises(DegenerateDivision):
        banded_inverse_alg1(_t([1.0, 0.0, 1.0], [0.5, 0.5]))


def test_batched_matches_single(rng):
    w = sample_w(64, 6, 0.4, 7, seed=rng)
    t = extract_tridiagonal(w)
    inv, band = exact_inverse(t), banded_inverse_alg1(t)
    for m in range(7):
        tm = extract_tridiagonal(w[m])
        np.testing.assert_allclose(inv[m], exact_inverse(tm), rtol=1e-13)
        np.testing.assert_allclose(band.diag[m], banded_inverse_alg1(tm).diag, rtol=1e-13)


def test_attenuation_statistic_zero_for_diagonal():
    assert p_attenuation_statistic(_t(np.ones((3, 5)) * 2, np.zeros((3, 4)))) == 0.0


def test_attenuation_grows_with_correlation():
    vals = [p_attenuation_statistic(extract_tridiagonal(sample_w(192, 12, z, 300, seed=1))) for z in (0.0, 0.3, 0.6)]
    assert vals[0] < vals[1] < vals[2]


def test_band_truncation_is_small():
    # entries outside the three central bands are below 1% of the diagonal
    for zeta in (0.0, 0.3, 0.5):
        inv = exact_inverse(extract_tridiagonal(sample_w(128, 8, zeta, 200, seed=2)))
        i, j = np.indices((8, 8))
        off = np.abs(inv[:, np.abs(i - j) > 1]).mean()
        main = np.abs(np.diagonal(inv, axis1=-2, axis2=-1)).mean()
        assert off < 0.01 * main


def test_step2_error_below_bound():
    for zeta in (0.0, 0.2, 0.4, 0.6):
        assert step2_error_percentage(extract_tridiagonal(sample_w(192, 12, zeta, 300, seed=3))) < 1.5


def test_step2_per_entry_k4(rng):
    w = sample_w(128, 4, 0.5, 200, seed=rng)
    t = extract_tridiagonal(w)
    exact = np.diagonal(exact_inverse(t), axis1=-2, axis2=-1).real
    approx = banded_inverse_alg1(t).diag.real
    assert np.max(np.abs(approx - exact) / np.abs(exact)) < 0.015


@settings(max_examples=60, deadline=None)
@given(k=st.integers(2, 12), seed=st.integers(0, 2**32 - 1), scale=st.floats(0.0, 0.6))
def test_property_alg_variants_agree(k, seed, scale):
    rng = np.random.default_rng(seed)
    b, a = random_dominant_tridiag(rng, k, scale)
    t = _t(b, a)
    o1, o2 = banded_inverse_alg1(t), banded_inverse_alg2(t)
    np.testing.assert_allclose(o2.diag, o1.diag, rtol=1e-13)
    np.testing.assert_allclose(o2.sub, o1.sub, rtol=1e-13, atol=1e-300)
    inv = exact_inverse(t)
    np.testing.assert_allclose(inv @ t.dense(), np.eye(k), atol=1e-10)
