"""Unified Hamiltonian, its exactly solvable part and the dressed basis.

Ordering of the full space is spin (x) boson, i.e. ``np.kron(spin_op, boson_op)``.
Dressed basis columns are label-major: column ``label.index * n_keep + n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.linalg

from .bosonic import FockTruncation, displacement, ladder_operators
from .spin import SpinLabel, all_labels, lambda_vector, pauli_embedded, sigma_sum

__all__ = [
    "ModelParams", "AlgebraRep", "DressedState", "DressedBasis",
    "heisenberg_rep", "su2_rep", "su11_rep", "su11_schwinger_rep",
    "key_formula_residual", "build_HL", "build_H0", "hamiltonian_parts",
    "dressed_state", "dressed_energy", "dressed_basis", "dressed_phases", "U0",
]

ALGEBRAS = ("N", "K", "J")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants.  ``m`` defaults to len(drive_freqs)."""

    omega: float
    g1: float
    g2: float
    delta: float
    drive_freqs: tuple
    drive_phases: tuple = None
    m: int = None
    algebra: str = "N"
    strong_ratio: float = 10.0

    def __post_init__(self):
        freqs = tuple(float(w) for w in np.atleast_1d(self.drive_freqs))
        m = len(freqs) if self.m is None else int(self.m)
        phases = (0.0,) * m if self.drive_phases is None else tuple(
            float(p) for p in np.atleast_1d(self.drive_phases))
        object.__setattr__(self, "drive_freqs", freqs)
        object.__setattr__(self, "drive_phases", phases)
        object.__setattr__(self, "m", m)
        for name in ("omega", "g1", "g2", "delta", "strong_ratio"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        if self.g1 < 0 or self.g2 < 0:
            raise ValueError("g1 and g2 must be >= 0")
        if not 1 <= m <= 6:
            raise ValueError("m must be in 1..6")
        if len(freqs) != m or len(phases) != m:
            raise ValueError(f"need {m} drive frequencies and phases")
        if any(not (w > 0 and math.isfinite(w)) for w in freqs):
            raise ValueError("drive frequencies must be finite and > 0")
        if self.algebra not in ALGEBRAS:
            raise ValueError(f"algebra must be one of {ALGEBRAS}")

    @property
    def x(self) -> float:
        return 2.0 * self.g1 / self.omega

    @property
    def gamma(self) -> float:
        """omega x^2, the level shift between Lambda=+-2 and Lambda=0 sectors."""
        return self.omega * self.x ** 2

    @property
    def strong_coupling(self) -> bool:
        if self.delta == 0.0:
            return self.g1 > 0.0
        return self.g1 / abs(self.delta) >= self.strong_ratio

    @property
    def gammas(self) -> tuple:
        """Bessel arguments 2 g2 / omega_j."""
        return tuple(2.0 * self.g2 / w for w in self.drive_freqs)

    def with_drive(self, j: int, omega_j: float) -> "ModelParams":
        freqs = list(self.drive_freqs)
        freqs[j - 1] = float(omega_j)
        return replace(self, drive_freqs=tuple(freqs))

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class AlgebraRep:
    """Generators (L+, L-, L3) of one of the three algebras."""

    kind: str
    raise_op: np.ndarray
    lower_op: np.ndarray
    L3: np.ndarray
    trusted: int
    spin: float = None
    bargmann: float = None

    @property
    def dim(self) -> int:
        return self.L3.shape[0]


def heisenberg_rep(trunc: FockTruncation) -> AlgebraRep:
    a, ad, N = ladder_operators(trunc)
    return AlgebraRep("N", ad, a, N, trunc.trusted)


def su2_rep(j: float) -> AlgebraRep:
    """Exact (2j+1)-dimensional spin-j generators, J3 ascending -j..j."""
    d = int(round(2 * j)) + 1
    if d < 1 or abs((d - 1) / 2 - j) > 1e-12:
        raise ValueError("spin must be a non-negative half-integer")
    mz = -j + np.arange(d)
    Jp = np.diag(np.sqrt(j * (j + 1) - mz[:-1] * (mz[:-1] + 1)), -1)
    return AlgebraRep("J", Jp, Jp.T.copy(), np.diag(mz), d, spin=j)


def su11_rep(k: float, trunc: FockTruncation) -> AlgebraRep:
    """Truncated discrete series: K3 = k + n, K+|n> = sqrt((n+1)(n+2k))|n+1>."""
    if k <= 0:
        raise ValueError("Bargmann index must be > 0")
    n = np.arange(trunc.dim - 1, dtype=float)
    Kp = np.diag(np.sqrt((n + 1) * (n + 2 * k)), -1)
    return AlgebraRep("K", Kp, Kp.T.copy(), np.diag(k + np.arange(trunc.dim, dtype=float)),
                      trunc.trusted, bargmann=k)


def su11_schwinger_rep(k: float, trunc: FockTruncation) -> AlgebraRep:
    """Two-boson form K+ = a1^dag a2^dag restricted to the sector n1 - n2 = 2k - 1."""
    d = int(round(2 * k - 1))
    if d < 0 or abs((d + 1) / 2 - k) > 1e-12:
        raise ValueError("two-boson realisation needs 2k - 1 a non-negative integer")
    a, ad, N = ladder_operators(trunc)
    one = np.eye(trunc.dim)
    Kp = np.kron(ad, ad)
    K3 = 0.5 * (np.kron(N, one) + np.kron(one, N) + np.eye(trunc.dim ** 2))
    size = trunc.dim - d
    idx = [(n + d) * trunc.dim + n for n in range(size)]
    S = np.ix_(idx, idx)
    Kp_s = Kp[S]
    return AlgebraRep("K", Kp_s, Kp_s.T.copy(), K3[S], max(1, size - trunc.buffer), bargmann=k)


def key_formula_residual(rep: AlgebraRep, omega: float, g1: float, Lambda: int) -> float:
    """Max-norm gap between the two sides of the diagonalising identity.

    N:  omega N + g1 L (a^dag + a) = omega D (N - (g1 L/omega)^2) D^dag
    K:  omega K3 + g1 L (K+ + K-)  = Omega G K3 G^dag, tanh(L x) = 2 g1 L / omega
    J:  same with tan in place of tanh and Omega = omega sqrt(1 + s^2)
    with D, G = exp(-(L x / 2)(L+ - L-)).
    """
    s = 2.0 * g1 * Lambda / omega
    c = 0.0
    if rep.kind == "N":
        Omega, half = omega, g1 * Lambda / omega
        c = half ** 2
    else:
        if Lambda == 0:
            raise ValueError("Lambda = 0 is excluded for the K and J formulas")
        if rep.kind == "K":
            if abs(s) >= 1.0:
                raise ValueError(f"|2 g1 Lambda / omega| = {abs(s):g} outside the tanh^-1 domain")
            Omega, half = omega * math.sqrt(1 - s * s), 0.5 * math.atanh(s)
        else:
            Omega, half = omega * math.sqrt(1 + s * s), 0.5 * math.atan(s)
    lhs = omega * rep.L3 + g1 * Lambda * (rep.raise_op + rep.lower_op)
    G = scipy.linalg.expm(-half * (rep.raise_op - rep.lower_op))
    rhs = Omega * G @ (rep.L3 - c * np.eye(rep.dim)) @ G.T
    b = rep.trusted
    return float(np.max(np.abs(lhs - rhs)[:b, :b]))


@lru_cache(maxsize=64)
def hamiltonian_parts(params: ModelParams, trunc: FockTruncation):
    """(static H0 part, sigma_3 term without the Delta/2, drive operators)."""
    if params.algebra != "N":
        raise ValueError("dynamics are only defined for the N algebra")
    m, M = params.m, 2 ** params.m
    a, ad, N = ladder_operators(trunc)
    one = np.eye(trunc.dim)
    static = params.omega * np.kron(np.eye(M), N) + params.g1 * np.kron(sigma_sum(m, 1), a + ad)
    s3 = np.kron(sigma_sum(m, 3), one)
    drives = tuple(np.kron(pauli_embedded(m, 1, j), one) for j in range(1, m + 1))
    for arr in (static, s3, *drives):
        arr.flags.writeable = False
    return static, s3, drives


def _drive_sum(params, drives, t):
    out = 0.0
    for Sj, w, ph in zip(drives, params.drive_freqs, params.drive_phases):
        out = out + params.g2 * math.cos(w * t + ph) * Sj
    return out


def build_H0(params: ModelParams, trunc: FockTruncation, t: float) -> np.ndarray:
    static, _, drives = hamiltonian_parts(params, trunc)
    return static + _drive_sum(params, drives, t)


def build_HL(params: ModelParams, trunc: FockTruncation, t: float,
             rep: AlgebraRep = None) -> np.ndarray:
    """Unified Hamiltonian.  Pass ``rep`` to assemble it for the K or J algebra."""
    if rep is None:
        _, s3, _ = hamiltonian_parts(params, trunc)
        return build_H0(params, trunc, t) + 0.5 * params.delta * s3
    m, M = params.m, 2 ** params.m
    one = np.eye(rep.dim)
    H = params.omega * np.kron(np.eye(M), rep.L3)
    H = H + params.g1 * np.kron(sigma_sum(m, 1), rep.raise_op + rep.lower_op)
    H = H + 0.5 * params.delta * np.kron(sigma_sum(m, 3), one)
    for j, (w, ph) in enumerate(zip(params.drive_freqs, params.drive_phases), start=1):
        H = H + params.g2 * math.cos(w * t + ph) * np.kron(pauli_embedded(m, 1, j), one)
    return H


@dataclass(frozen=True, eq=False)
class DressedState:
    label: SpinLabel
    n: int
    vector: np.ndarray


def dressed_state(label: SpinLabel, n: int, params: ModelParams,
                  trunc: FockTruncation) -> DressedState:
    if label.m != params.m:
        raise ValueError("label length does not match m")
    if not 0 <= n < trunc.trusted:
        raise ValueError(f"n={n} lies in the buffer zone (trusted levels: {trunc.trusted})")
    D = displacement(trunc, -0.5 * label.Lambda * params.x)
    return DressedState(label, n, np.kron(lambda_vector(label), D[:, n]))


def dressed_energy(label: SpinLabel, n: int, params: ModelParams, t: float = None) -> float:
    """E_n(lambda), plus the drive shift when t is given."""
    E = params.omega * (n - 0.25 * params.x ** 2 * label.Lambda ** 2)
    if t is not None:
        E += params.g2 * sum(l * math.cos(w * t + ph) for l, w, ph in
                             zip(label, params.drive_freqs, params.drive_phases))
    return E


@dataclass(frozen=True, eq=False)
class DressedBasis:
    labels: tuple
    n_keep: int
    vectors: np.ndarray      # (2^m dim, 2^m n_keep)
    energies: np.ndarray     # static E_n(lambda) per column
    lam: np.ndarray          # (columns, m) lambda_j per column
    ns: np.ndarray

    def column(self, label: SpinLabel, n: int) -> int:
        return label.index * self.n_keep + n


@lru_cache(maxsize=32)
def dressed_basis(params: ModelParams, trunc: FockTruncation, n_keep: int = None) -> DressedBasis:
    n_keep = trunc.trusted if n_keep is None else int(n_keep)
    if not 1 <= n_keep <= trunc.trusted:
        raise ValueError("n_keep must lie in 1..dim-buffer")
    labels = tuple(all_labels(params.m))
    cols, E, lam, ns = [], [], [], []
    for lab in labels:
        D = displacement(trunc, -0.5 * lab.Lambda * params.x)
        lv = lambda_vector(lab)
        cols.append(np.kron(lv[:, None], D[:, :n_keep]))
        for n in range(n_keep):
            E.append(dressed_energy(lab, n, params))
            lam.append(lab.lambdas)
            ns.append(n)
    V = np.hstack(cols)
    arrays = (V, np.array(E), np.array(lam, dtype=float), np.array(ns))
    for arr in arrays:
        arr.flags.writeable = False
    return DressedBasis(labels, n_keep, *arrays)


def dressed_phases(basis: DressedBasis, params: ModelParams, t: float) -> np.ndarray:
    """t E_n(lambda) + sum_j lambda_j (g2/omega_j) sin(omega_j t + phi_j) per column."""
    w = np.asarray(params.drive_freqs)
    ph = np.asarray(params.drive_phases)
    return t * basis.energies + basis.lam @ ((params.g2 / w) * np.sin(w * t + ph))


def U0(params: ModelParams, trunc: FockTruncation, t: float, n_keep: int = None) -> np.ndarray:
    """Propagator of H0 assembled from dressed projectors with n < n_keep."""
    basis = dressed_basis(params, trunc, n_keep)
    V = basis.vectors
    return (V * np.exp(-1j * dressed_phases(basis, params, t))) @ V.T
