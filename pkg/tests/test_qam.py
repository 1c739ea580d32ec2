import math

import numpy as np
import pytest
from scipy.optimize import brentq

from oracles import nearest_point_bits
from tmadet.channel import complex_normal
from tmadet.errors import BitCountMismatch
from tmadet.qam import awgn_ber, bits_per_symbol, constellation, qam_demodulate_hard, qam_modulate, rayleigh_ber


def _all_labels(order):
    nb = bits_per_symbol(order)
    labels = np.arange(order)
    return ((labels[:, None] >> np.arange(nb - 1, -1, -1)) & 1).astype(np.uint8)


def test_qpsk_anchor():
    np.testing.assert_allclose(qam_modulate(np.array([0, 0]), 4), [(1 + 1j) / math.sqrt(2)])


@pytest.mark.parametrize("order", [4, 16, 64])
def test_unit_energy(order):
    assert abs(np.mean(np.abs(constellation(order)) ** 2) - 1.0) < 1e-12


@pytest.mark.parametrize("order", [4, 16, 64])
def test_round_trip_all_points(order):
    bits = _all_labels(order)
    sym = qam_modulate(bits.reshape(-1), order)
    np.testing.assert_allclose(sym, constellation(order))
    np.testing.assert_array_equal(qam_demodulate_hard(sym, order), bits.reshape(-1))


@pytest.mark.parametrize("order", [16, 64])
def test_gray_neighbours_differ_in_one_bit(order):
    pts = constellation(order)
    bits = _all_labels(order)
    dmin = np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(order) * 10)
    for i in range(order):
        for j in range(order):
            if i != j and abs(abs(pts[i] - pts[j]) - dmin) < 1e-9:
                assert np.sum(bits[i] != bits[j]) == 1


@pytest.mark.parametrize("order", [4, 16, 64])
def test_small_perturbation_and_brute_force(order, rng):
    pts = constellation(order)
    dmin = np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(order) * 10)
    bits = rng.integers(0, 2, size=bits_per_symbol(order) * 500).astype(np.uint8)
    sym = qam_modulate(bits, order)
    jitter = 0.49 * dmin / 2 * np.exp(2j * np.pi * rng.random(sym.shape))
    np.testing.assert_array_equal(qam_demodulate_hard(sym + jitter, order), bits)
    noisy = sym + complex_normal(rng, sym.shape, 0.2)
    ref = nearest_point_bits(noisy, pts, _all_labels(order))
    np.testing.assert_array_equal(qam_demodulate_hard(noisy, order), ref)


def test_bit_count_mismatch():
    with pytest.raises(BitCountMismatch):
        qam_modulate(np.zeros(5, np.uint8), 4)
    with pytest.raises(ValueError):
        bits_per_symbol(8)


def test_qpsk_closed_form():
    snr = 10.0
    assert abs(awgn_ber(snr, 4) - 0.5 * math.erfc(math.sqrt(snr / 2))) < 1e-15


@pytest.mark.parametrize("order", [4, 16, 64])
def test_awgn_ber_matches_simulation(order):
    rng = np.random.default_rng(order)
    nb = bits_per_symbol(order)
    # SNR giving BER about 1e-2 from the analytic curve
    snr_db = brentq(lambda d: awgn_ber(10 ** (d / 10), order) - 1e-2, -5, 40)
    bits = rng.integers(0, 2, size=nb * 200_000).astype(np.uint8)
    sym = qam_modulate(bits, order)
    noisy = sym + complex_normal(rng, sym.shape, 10 ** (-snr_db / 10))
    ber = np.mean(qam_demodulate_hard(noisy, order) != bits)
    assert abs(ber - 1e-2) < 0.1e-2


def test_rayleigh_ber_qpsk_closed_form():
    g = 10.0
    ref = 0.5 * (1 - math.sqrt(g / 2 / (1 + g / 2)))
    assert abs(rayleigh_ber(g, 4) - ref) < 1e-9
