import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import DEFAULT, TRUNC, random_params
from sccqed.bosonic import FockTruncation, bessel_j, displaced_diag_element
from sccqed.cat_frame import (_EXPANSION_TERMS, CAT_FROM_PRODUCT, HF_matrix, HF_oracle,
                              K0F_K1F, E_delta, cat_basis, cat_hamiltonian, cat_to_product,
                              coefficient_functions, dropped_norm, expansion_m2, product_to_cat,
                              split_HF)
from sccqed.model import ModelParams, dressed_state
from sccqed.spin import SpinLabel

SMALL = FockTruncation(24, 6)


def test_cat_matrix_orthogonal():
    assert np.abs(CAT_FROM_PRODUCT @ CAT_FROM_PRODUCT.T - np.eye(4)).max() < 1e-15


def test_cat_states_follow_definition():
    n = 2
    d = {lab: dressed_state(SpinLabel(lab), n, DEFAULT, TRUNC).vector
         for lab in [(1, 1), (1, -1), (-1, 1), (-1, -1)]}
    s = 2 ** -0.5
    ref = [s * (d[1, 1] + d[-1, -1]), s * (d[1, 1] - d[-1, -1]),
           s * (d[-1, 1] + d[1, -1]), s * (d[-1, 1] - d[1, -1])]
    for cat, r in zip(cat_basis(n, DEFAULT, TRUNC), ref):
        assert np.abs(cat.vector - r).max() < 1e-12


def test_cat_bell_state_at_zero_coupling():
    p = DEFAULT.replace(g1=0.0)
    phi3 = cat_basis(4, p, TRUNC)[2].vector
    bell = np.zeros(4)
    bell[[1, 2]] = 2 ** -0.5          # (|-1,1> + |1,-1>)/sqrt2 in the sigma_1 basis
    from sccqed.spin import lambda_vector
    spin = sum(c * lambda_vector(SpinLabel.from_index(2, k)) for k, c in enumerate(bell))
    e = np.zeros(TRUNC.dim)
    e[4] = 1.0
    assert np.abs(phi3 - np.kron(spin, e)).max() < 1e-15


@pytest.mark.parametrize("n", [0, 5, 20])
def test_cat_orthonormal(n):
    V = np.column_stack([c.vector for c in cat_basis(n, DEFAULT, TRUNC)])
    assert np.abs(V.T @ V - np.eye(4)).max() < 1e-10


def test_cat_basis_errors():
    with pytest.raises(ValueError):
        cat_basis(0, ModelParams(1.0, 0.1, 0.0, 0.01, (0.5,)), TRUNC)
    with pytest.raises(ValueError):
        cat_basis(TRUNC.trusted, DEFAULT, TRUNC)


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_cat_round_trip(v):
    v = np.asarray(v)
    assert np.abs(cat_to_product(product_to_cat(v)) - v).max() < 1e-13


def test_HF_spectrum_preserved():
    """Compression of sum sigma_3: spectrum in [-2, 2], and {-2, 0, 0, 2} on the inner block."""
    H = HF_oracle(SMALL.trusted, DEFAULT, SMALL, 3.7)
    ev = np.linalg.eigvalsh(H)
    assert ev.min() > -2 - 1e-12 and ev.max() < 2 + 1e-12
    for value, mult in ((-2.0, 1), (0.0, 2), (2.0, 1)):
        assert np.sum(np.abs(ev - value) < 1e-6) >= mult * SMALL.inner


def test_HF_zero_drive_at_t0():
    p = DEFAULT.replace(g2=0.0)
    n_max = 10
    H = HF_matrix(n_max, p, TRUNC, 0.0)
    assert np.abs(H - HF_oracle(n_max, p, TRUNC, 0.0)).max() < 1e-10
    from sccqed.bosonic import displacement
    D = displacement(TRUNC, p.x)[:n_max, :n_max]
    lab = SpinLabel((1, 1))
    r, c = lab.index * n_max, lab.flip(1).index * n_max
    assert np.abs(H[r:r + n_max, c:c + n_max] - D).max() < 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 60.0))
def test_HF_matches_oracle(seed, t):
    p = random_params(np.random.default_rng(seed))
    n_max = 12
    assert np.abs(HF_matrix(n_max, p, TRUNC, t) - HF_oracle(n_max, p, TRUNC, t)).max() < 1e-8


def test_HF_general_m_and_phases():
    p = ModelParams(1.0, 0.12, 0.03, 0.01, (0.5, 0.8, 1.1), drive_phases=(0.2, -0.4, 1.0))
    tr = FockTruncation(20, 5)
    assert np.abs(HF_matrix(6, p, tr, 2.3) - HF_oracle(6, p, tr, 2.3)).max() < 1e-8


def test_split_partition():
    H = HF_matrix(10, DEFAULT, TRUNC, 1.1)
    a, b = split_HF(H, 10)
    assert np.array_equal(a + b, H)
    n = np.arange(40) % 10
    assert np.all(a[np.not_equal.outer(n, n)] == 0)
    assert np.all(b[np.equal.outer(n, n)] == 0)
    _, b0 = split_HF(HF_matrix(10, DEFAULT.replace(g1=0.0), TRUNC, 1.1), 10)
    assert np.abs(b0).max() == 0.0


def test_dropped_part_shrinks_with_x():
    norms = [np.linalg.norm(split_HF(HF_matrix(10, DEFAULT.replace(g1=g), TRUNC, 0.4), 10)[1])
             for g in (0.25, 0.2, 0.15, 0.1, 0.05, 0.0)]
    assert all(a > b for a, b in zip(norms, norms[1:]))
    assert dropped_norm(DEFAULT.replace(g1=0.0), TRUNC, 0) == 0.0
    assert dropped_norm(DEFAULT, TRUNC, 0) > 0


def test_expansion_is_diagonal_block_of_HF():
    n_max, t = 8, 5.3
    H, _ = split_HF(HF_matrix(n_max, DEFAULT, TRUNC, t), n_max)
    d = displaced_diag_element(3, DEFAULT.x)
    block = H[3::n_max, 3::n_max]
    assert np.abs(block - d * expansion_m2(3, DEFAULT, t)).max() < 1e-12


def test_expansion_phase_bookkeeping():
    """Each term: column = row flipped at site j, x-phase sign 1 - lambda_j Lambda, Theta sign lambda_j."""
    for row, col, sx, sth, j in _EXPANSION_TERMS:
        lab = SpinLabel(row)
        lj = lab.lambdas[j - 1]
        assert lab.flip(j) == SpinLabel(col)
        assert sx == 1 - lj * lab.Lambda
        assert sth == lj
    rng = np.random.default_rng(7)
    p = DEFAULT
    for t in rng.uniform(0, 100, 5):
        E = expansion_m2(0, p, t)
        for row, col, sx, sth, j in _EXPANSION_TERMS:
            r, c = SpinLabel(row), SpinLabel(col)
            dE = p.omega * p.x ** 2 * (1 - r.lambdas[j - 1] * r.Lambda)
            theta = p.g2 * np.sin(p.drive_freqs[j - 1] * t) / p.drive_freqs[j - 1]
            ref = np.exp(1j * (t * dE + 2 * r.lambdas[j - 1] * theta))
            assert abs(E[r.index, c.index] - ref) < 1e-12


def test_K0F_K1F_equals_expansion():
    k0, k1, coeffs = K0F_K1F(0, DEFAULT, cutoff=80)
    C = CAT_FROM_PRODUCT
    for t in (0.0, 0.9, 17.0):
        M = k0(t) + k1(t)
        assert np.abs(M - C @ expansion_m2(0, DEFAULT, t) @ C.T).max() < 1e-9
        assert np.abs(M - cat_hamiltonian(0, DEFAULT, t) / coeffs.prefactor).max() < 1e-9
        full = coeffs.prefactor * M
        assert np.abs(full - full.conj().T).max() < 1e-10


def test_K0F_structure():
    k0, _, _ = K0F_K1F(0, DEFAULT)
    M = k0(2.0)
    G1, G2 = DEFAULT.gammas
    ph = np.exp(-2j * DEFAULT.gamma)
    assert M[0, 2] == pytest.approx((bessel_j(0, G1) + bessel_j(0, G2)) * ph, abs=1e-15)
    assert M[1, 3] == pytest.approx((bessel_j(0, G1) - bessel_j(0, G2)) * ph, abs=1e-15)
    mask = np.ones((4, 4), bool)
    mask[[0, 2, 1, 3], [2, 0, 3, 1]] = False
    assert np.all(M[mask] == 0)
    equal = DEFAULT.replace(drive_freqs=(0.5, 0.5))
    k0e, _, _ = K0F_K1F(0, equal)
    assert abs(k0e(1.3)[1, 3]) == 0.0


@given(st.floats(0.0, 500.0))
def test_coefficient_conjugation_symmetry(t):
    c = coefficient_functions(0, DEFAULT)
    A, B, C, D = c(np.array([t]))
    assert abs(A.imag).max() < 1e-14 and abs(D.imag).max() < 1e-14
    assert abs(B.real).max() < 1e-14 and abs(C.real).max() < 1e-14


def test_coefficients_series_vs_exact():
    c = coefficient_functions(1, DEFAULT)
    t = np.linspace(0, 300, 31)
    for a, b in zip(c(t), c(t, exact=True)):
        assert np.abs(a - b).max() < 1e-12


def test_E_delta():
    n = 0
    p0 = DEFAULT.replace(g2=0.0)
    d = displaced_diag_element(n, p0.x)
    assert E_delta(n, p0, "+") == pytest.approx(p0.delta * d, rel=1e-15)
    assert E_delta(n, p0, "-") == 0.0
    pz = DEFAULT.replace(delta=0.0)
    assert E_delta(n, pz, +1) == 0.0 and E_delta(n, pz, -1) == 0.0
    # Gamma_1 = 1.0, Gamma_2 = 2.0 with g2 = 0.05
    p = DEFAULT.replace(drive_freqs=(0.1, 0.05))
    ref = 0.5 * p.delta * displaced_diag_element(0, 0.4) * (bessel_j(0, 1.0) - bessel_j(0, 2.0))
    assert E_delta(0, p, -1) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(ValueError):
        E_delta(0, p, 0)


def test_nonzero_phase_rejected_in_closed_forms():
    p = DEFAULT.replace(drive_phases=(0.1, 0.0))
    with pytest.raises(ValueError):
        expansion_m2(0, p, 0.0)
    with pytest.raises(ValueError):
        cat_hamiltonian(0, p, 0.0)
