"""Interaction-frame Hamiltonian and the m=2 cat-state reduction.

Cat-basis matrices use the index order (Phi1, Phi2, Phi3, Phi4).  The
block order used by the gate equations is (Phi1, Phi3, Phi2, Phi4), see
``BLOCK_ORDER``.  Closed forms here assume all drive phases are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bosonic import (FockTruncation, bessel_j, bessel_table, default_cutoff,
                      displaced_diag_element, displacement)
from .model import ModelParams, U0, dressed_basis
from .spin import SpinLabel, all_labels, sigma_sum

__all__ = [
    "CAT_FROM_PRODUCT", "BLOCK_ORDER", "CatState", "CoefficientFunctions",
    "cat_basis", "product_to_cat", "cat_to_product", "HF_matrix", "HF_oracle",
    "split_HF", "dropped_norm", "expansion_m2", "coefficient_functions", "K0F_K1F",
    "E_delta", "cat_hamiltonian",
]

_s = 1.0 / math.sqrt(2.0)
# rows Phi1..Phi4, columns product labels (1,1), (1,-1), (-1,1), (-1,-1)
CAT_FROM_PRODUCT = np.array([
    [_s, 0.0, 0.0, _s],
    [_s, 0.0, 0.0, -_s],
    [0.0, _s, _s, 0.0],
    [0.0, -_s, _s, 0.0],
])
CAT_FROM_PRODUCT.flags.writeable = False
BLOCK_ORDER = (0, 2, 1, 3)


def _need_m2(params: ModelParams):
    if params.m != 2:
        raise ValueError(f"cat-basis constructions need m=2, got m={params.m}")


def _need_zero_phases(params: ModelParams):
    if any(p != 0.0 for p in params.drive_phases):
        raise ValueError("cat-frame closed forms assume zero drive phases")


@dataclass(frozen=True, eq=False)
class CatState:
    index: int          # 1..4
    n: int
    vector: np.ndarray


def product_to_cat(v):
    """Dressed-product amplitudes (binary label order) -> cat amplitudes."""
    return CAT_FROM_PRODUCT @ np.asarray(v)


def cat_to_product(v):
    return CAT_FROM_PRODUCT.T @ np.asarray(v)


def cat_basis(n: int, params: ModelParams, trunc: FockTruncation) -> tuple:
    _need_m2(params)
    if not 0 <= n < trunc.trusted:
        raise ValueError(f"n={n} lies in the buffer zone")
    basis = dressed_basis(params, trunc)
    cols = basis.vectors[:, [lab.index * basis.n_keep + n for lab in basis.labels]]
    vecs = cols @ CAT_FROM_PRODUCT.T
    return tuple(CatState(k + 1, n, vecs[:, k].copy()) for k in range(4))


def HF_matrix(n_max: int, params: ModelParams, trunc: FockTruncation, t: float) -> np.ndarray:
    """Closed form of U0^dag (sum_j sigma3_j) U0 in the dressed basis, n < n_max.

    Element [(lam, n), (lam_(j), n')] =
        exp(i{t w (n-n') + t w x^2 (1 - lam_j Lam) + 2 lam_j (g2/w_j) sin(w_j t + phi_j)})
        * <n| exp(lam_j x (a^dag - a)) |n'>.
    """
    if not 1 <= n_max <= trunc.trusted:
        raise ValueError("n_max must lie in 1..dim-buffer")
    m, w, x = params.m, params.omega, params.x
    nn = np.arange(n_max)
    dn = np.subtract.outer(nn, nn)
    H = np.zeros((2 ** m * n_max, 2 ** m * n_max), dtype=complex)
    for lab in all_labels(m):
        r = lab.index * n_max
        for j in range(1, m + 1):
            lj = lab.lambdas[j - 1]
            c = lab.flip(j).index * n_max
            wj, phj = params.drive_freqs[j - 1], params.drive_phases[j - 1]
            phase = t * w * dn + t * w * x * x * (1 - lj * lab.Lambda) \
                + 2 * lj * (params.g2 / wj) * math.sin(wj * t + phj)
            Dx = displacement(trunc, lj * x)[:n_max, :n_max]
            H[r:r + n_max, c:c + n_max] = np.exp(1j * phase) * Dx
    return H


def HF_oracle(n_max: int, params: ModelParams, trunc: FockTruncation, t: float) -> np.ndarray:
    """Direct conjugation, restricted to dressed states with n < n_max."""
    basis = dressed_basis(params, trunc)
    keep = np.flatnonzero(basis.ns < n_max)
    V = basis.vectors[:, keep]
    U = U0(params, trunc, t)
    S3 = np.kron(sigma_sum(params.m, 3), np.eye(trunc.dim))
    W = U @ V
    return W.conj().T @ S3 @ W


def _fock_index(size: int, n_max: int) -> np.ndarray:
    return np.arange(size) % n_max


def split_HF(HF: np.ndarray, n_max: int):
    """(H_F', H_F''): the Fock-diagonal n = n' part and the rest."""
    n = _fock_index(HF.shape[0], n_max)
    same = np.equal.outer(n, n)
    return np.where(same, HF, 0.0), np.where(same, 0.0, HF)


def dropped_norm(params: ModelParams, trunc: FockTruncation, n: int, n_max: int = None) -> float:
    """(Delta/2) * spectral norm of the H_F'' couplings out of Fock sector n.

    The magnitudes of H_F entries do not depend on t, so t = 0 suffices.
    """
    n_max = trunc.trusted if n_max is None else n_max
    _, HF2 = split_HF(HF_matrix(n_max, params, trunc, 0.0), n_max)
    rows = np.flatnonzero(_fock_index(HF2.shape[0], n_max) == n)
    if not rows.size:
        return 0.0
    return 0.5 * abs(params.delta) * float(np.linalg.norm(HF2[rows], 2))


# (row label, column label, sign of t w x^2, sign of Theta, which drive)
_EXPANSION_TERMS = (
    ((1, 1), (-1, 1), -1, +1, 1),
    ((1, 1), (1, -1), -1, +1, 2),
    ((-1, -1), (-1, 1), -1, -1, 2),
    ((-1, -1), (1, -1), -1, -1, 1),
    ((-1, 1), (1, 1), +1, -1, 1),
    ((1, -1), (1, 1), +1, -1, 2),
    ((-1, 1), (-1, -1), +1, +1, 2),
    ((1, -1), (-1, -1), +1, +1, 1),
)


def expansion_m2(n: int, params: ModelParams, t: float) -> np.ndarray:
    """The eight-term bracket at Fock level n, 4x4 over product labels.

    Excludes the common factor <n|exp(x(a^dag - a))|n>.
    """
    _need_m2(params)
    _need_zero_phases(params)
    gx = params.gamma
    out = np.zeros((4, 4), dtype=complex)
    for row, col, sx, sth, j in _EXPANSION_TERMS:
        theta = params.g2 * math.sin(params.drive_freqs[j - 1] * t) / params.drive_freqs[j - 1]
        out[SpinLabel(row).index, SpinLabel(col).index] += np.exp(1j * (sx * t * gx + 2 * sth * theta))
    return out


@dataclass(frozen=True)
class CoefficientFunctions:
    """A0, B0, C0, D0 of the cat-frame equations, with the common prefactor.

    prefactor = (Delta/2) <n|exp(x(a^dag - a))|n>.  Series keep 0 < |alpha| <= cutoff.
    """

    n: int
    prefactor: float
    Gamma1: float
    Gamma2: float
    omega1: float
    omega2: float
    cutoff: int

    def _weights(self, G: float):
        tab = bessel_table(G, self.cutoff)
        alpha = np.arange(-self.cutoff, self.cutoff + 1)
        pos = tab[np.abs(alpha)]
        Jp = np.where((alpha < 0) & (alpha % 2 == 1), -pos, pos)     # J_alpha(G)
        Jm = np.where(alpha % 2 == 1, -Jp, Jp)                       # J_alpha(-G)
        keep = alpha != 0
        return alpha[keep], 0.5 * (Jp + Jm)[keep], 0.5 * (Jp - Jm)[keep]

    def harmonic_weights(self, j: int):
        """(alpha, even part, odd part) for drive j."""
        return self._weights(self.Gamma1 if j == 1 else self.Gamma2)

    def _series(self, t, exact: bool):
        t = np.asarray(t, dtype=float)
        out = []
        for G, w in ((self.Gamma1, self.omega1), (self.Gamma2, self.omega2)):
            if exact:
                th = 0.5 * G * np.sin(w * t)
                out.append((np.cos(2 * th) - bessel_j(0, G), 1j * np.sin(2 * th)))
            else:
                alpha, ev, od = self._weights(G)
                ph = np.exp(1j * np.multiply.outer(t, alpha * w))
                out.append((ph @ ev, ph @ od))
        (e1, o1), (e2, o2) = out
        return e1, o1, e2, o2

    def unscaled(self, t, exact: bool = False):
        """(A0, B0, C0, D0) without the prefactor."""
        e1, o1, e2, o2 = self._series(t, exact)
        return e1 + e2, o1 - o2, o1 + o2, e1 - e2

    def __call__(self, t, exact: bool = False):
        return tuple(self.prefactor * v for v in self.unscaled(t, exact))


def coefficient_functions(n: int, params: ModelParams, cutoff: int = None) -> CoefficientFunctions:
    _need_m2(params)
    G1, G2 = params.gammas
    cutoff = default_cutoff(G1, G2) if cutoff is None else int(cutoff)
    pref = 0.5 * params.delta * displaced_diag_element(n, params.x)
    return CoefficientFunctions(n, pref, G1, G2, *params.drive_freqs, cutoff)


def E_delta(n: int, params: ModelParams, sign: int) -> float:
    _need_m2(params)
    if sign not in (1, -1, "+", "-"):
        raise ValueError("sign must be + or -")
    s = 1 if sign in (1, "+") else -1
    G1, G2 = params.gammas
    pref = 0.5 * params.delta * displaced_diag_element(n, params.x)
    return pref * (bessel_j(0, G1) + s * bessel_j(0, G2))


def _cat_matrix(weights, u):
    """4x4 (Phi1..Phi4) Hermitian matrix from the upper couplings a13, a14, a23, a24."""
    a13, a14, a23, a24 = weights
    M = np.zeros((4, 4), dtype=complex)
    M[0, 2], M[0, 3], M[1, 2], M[1, 3] = u * a13, u * a14, u * a23, u * a24
    return M + M.conj().T


def K0F_K1F(n: int, params: ModelParams, cutoff: int = None):
    """Return (K0F'(t), K1F'(t), coefficients); the matrices exclude the prefactor."""
    _need_m2(params)
    _need_zero_phases(params)
    coeffs = coefficient_functions(n, params, cutoff)
    G1, G2 = params.gammas
    j1, j2 = bessel_j(0, G1), bessel_j(0, G2)
    gx = params.gamma

    def k0(t):
        return _cat_matrix((j1 + j2, 0.0, 0.0, j1 - j2), np.exp(-1j * t * gx))

    def k1(t, exact: bool = False):
        A, B, C, D = coeffs.unscaled(t, exact)
        return _cat_matrix((A, B, C, D), np.exp(-1j * t * gx))

    return k0, k1, coeffs


def cat_hamiltonian(n: int, params: ModelParams, t: float) -> np.ndarray:
    """(Delta/2) d_n (K0F' + K1F') summed in closed form, cat order Phi1..Phi4."""
    _need_m2(params)
    _need_zero_phases(params)
    pref = 0.5 * params.delta * displaced_diag_element(n, params.x)
    c = [math.cos(G * math.sin(w * t)) for G, w in zip(params.gammas, params.drive_freqs)]
    s = [math.sin(G * math.sin(w * t)) for G, w in zip(params.gammas, params.drive_freqs)]
    weights = (c[0] + c[1], 1j * (s[0] - s[1]), 1j * (s[0] + s[1]), c[0] - c[1])
    return pref * _cat_matrix(weights, np.exp(-1j * t * params.gamma))
