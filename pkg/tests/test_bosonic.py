import math

import numpy as np
import pytest
import scipy.linalg
import scipy.special
from hypothesis import given
from hypothesis import strategies as st

from sccqed.bosonic import (FockTruncation, TruncationError, bessel_j, bessel_series,
                            bessel_table, bessel_tail_bound, default_cutoff,
                            displaced_diag_element, displaced_element, displacement,
                            jacobi_anger, ladder_operators, laguerre, truncation_sound)


def test_truncation_validation():
    with pytest.raises(ValueError):
        FockTruncation(1)
    with pytest.raises(ValueError):
        FockTruncation(8, 8)
    with pytest.raises(ValueError):
        FockTruncation(8, -1)
    t = FockTruncation(64, 16)
    assert (t.trusted, t.inner) == (48, 32)


def test_ladder_smallest():
    a, ad, N = ladder_operators(FockTruncation(2))
    assert np.array_equal(a, [[0, 1], [0, 0]])
    assert np.array_equal(ad, a.T)
    assert np.array_equal(N, np.diag([0, 1]))


def test_commutator_away_from_cutoff():
    a, ad, _ = ladder_operators(FockTruncation(4))
    assert np.allclose((a @ ad - ad @ a)[:3, :3], np.eye(3), atol=0)


def test_number_operator():
    a, ad, N = ladder_operators(FockTruncation(16))
    assert np.abs((ad @ a)[:15, :15] - N[:15, :15]).max() < 1e-14


def test_displacement_zero_is_identity():
    assert np.array_equal(displacement(FockTruncation(10), 0.0), np.eye(10))


def test_displacement_coherent_column():
    D = displacement(FockTruncation(64), 0.5)
    n = np.arange(64)
    ref = np.exp(-0.125) * 0.5 ** n / np.sqrt(scipy.special.factorial(n))
    assert np.abs(D[:, 0] - ref).max() < 1e-12


def test_displacement_group_inverse():
    tr = FockTruncation(48, 12)
    P = displacement(tr, 0.7) @ displacement(tr, -0.7)
    assert np.abs(P[:36, :36] - np.eye(36)).max() < 1e-12


def test_displacement_read_only():
    D = displacement(FockTruncation(12), 0.3)
    with pytest.raises(ValueError):
        D[0, 0] = 1.0


def test_displacement_refuses_unsound_theta():
    with pytest.raises(TruncationError):
        displacement(FockTruncation(16), 2.1)      # 4.41 > 16/4


@given(st.floats(-2.0, 2.0))
def test_displacement_unitary(theta):
    D = displacement(FockTruncation(64, 16), theta)
    assert np.abs(D.T @ D - np.eye(64)).max() < 1e-12


def test_diag_element_examples():
    assert displaced_diag_element(0, 0.0) == 1.0
    ref = scipy.linalg.expm(0.8 * (np.diag(np.sqrt(np.arange(1, 64)), -1)
                                   - np.diag(np.sqrt(np.arange(1, 64)), 1)))[2, 2]
    assert abs(displaced_diag_element(2, 0.8) - ref) < 1e-10
    with pytest.raises(ValueError):
        displaced_diag_element(-1, 0.3)


@given(st.integers(0, 10), st.floats(-2.0, 2.0))
def test_diag_element_matches_matrix(n, x):
    tr = FockTruncation(64, 16)
    assert abs(displaced_diag_element(n, x) - displaced_element(n, n, x, tr)) < 1e-10


@given(st.integers(0, 40), st.floats(0.0, 3.0))
def test_diag_element_even_in_x(n, x):
    assert displaced_diag_element(n, x) == displaced_diag_element(n, -x)


def test_laguerre_recurrence_large_n():
    y = np.linspace(0, 4, 9)
    for n in (0, 1, 5, 20, 35):
        assert np.allclose(laguerre(n, y), scipy.special.eval_laguerre(n, y), rtol=1e-10, atol=1e-12)


def test_truncation_rule():
    tr = FockTruncation(48, 12)
    assert truncation_sound(tr, 0.4, 35)
    assert not truncation_sound(FockTruncation(4, 1), 1.0, 2)


def test_bessel_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    z = 2.5
    series = sum((-1) ** k * (z / 2) ** (2 * k + 3) / (math.factorial(k) * math.factorial(k + 3))
                 for k in range(40))
    assert abs(bessel_j(3, z) - series) < 1e-14


@given(st.integers(-30, 30), st.floats(-80.0, 80.0))
def test_bessel_parity(alpha, z):
    """J_a(-z) = (-1)^a J_a(z) = J_{-a}(z)."""
    sign = -1.0 if alpha % 2 else 1.0
    assert bessel_j(alpha, -z) == pytest.approx(sign * bessel_j(alpha, z), abs=1e-15)
    assert bessel_j(-alpha, z) == pytest.approx(sign * bessel_j(alpha, z), abs=1e-15)


@given(st.floats(0.1, 5.0), st.integers(-10, 10))
def test_bessel_recurrence(z, alpha):
    lhs = bessel_j(alpha - 1, z) + bessel_j(alpha + 1, z)
    assert abs(lhs - 2 * alpha / z * bessel_j(alpha, z)) < 1e-10


def test_bessel_table_against_scipy():
    z = np.array([[0.0, 0.3, -1.7, 3e-7], [12.0, 63.9, 150.0, -1e-200]])
    tab = bessel_table(z, 60)
    ref = scipy.special.jv(np.arange(61)[:, None, None], z[None])
    assert np.abs(tab - ref).max() < 1e-13


def test_series_symmetry_and_tail():
    s = bessel_series(3.0, 40)
    for a in range(1, 41):
        assert s.coefficient(-a) == (-1) ** a * s.coefficient(a)
    assert s.coefficient(41) == 0.0
    assert s.certify(1e-12)
    assert bessel_tail_bound(3.0, 40) >= sum(abs(scipy.special.jv(a, 3.0)) * 2 for a in range(41, 80))
    assert bessel_tail_bound(100.0, 10) == math.inf


def test_jacobi_anger_examples():
    assert jacobi_anger(1, 0.0, 0.7, 1.3, 0) == 1.0
    for cutoff in (5, 20, 40):
        err = abs(jacobi_anger(1, 0.4, 0.2, 0.0, cutoff) - 1.0)
        assert err < max(10 * bessel_tail_bound(4.0, cutoff), 1e-15)
    g2, w, t = 0.75, 1.0, 0.7       # Gamma = 1.5
    direct = np.exp(2j * g2 * np.sin(w * t) / w)
    assert abs(jacobi_anger(1, g2, w, t, 40) - direct) < 1e-13
    with pytest.raises(ValueError):
        jacobi_anger(0, g2, w, t, 40)


@given(st.sampled_from([1, -1]), st.floats(0.0, 0.2), st.floats(0.01, 2.0), st.floats(0.0, 100.0))
def test_jacobi_anger_converges(sign, g2, w, t):
    G = 2 * g2 / w
    cutoff = default_cutoff(G)
    ref = np.exp(2j * sign * g2 * np.sin(w * t) / w)
    assert abs(jacobi_anger(sign, g2, w, t, cutoff) - ref) < 1e-10
