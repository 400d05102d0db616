"""Two-level solver, resonance search and the rotating-wave gate.

Block vectors are ordered (c1, c3, c2, c4): the first pair is the
(Phi1, Phi3) block driven by E+, the second the (Phi2, Phi4) block
driven by E-.

Two facts about the reduction, both checked in the test-suite:

* the resonant term of the exact equations is -R K (not -(R/2) K), so the
  population transfer goes as sin^2(R t); ``gate_unitary`` keeps the
  closed form with R t / 2 and ``RwaGate.propagator`` gives the derived one;
* v_nu is v_mu rotated by 90 degrees, so nu+ - nu- = -(mu+ - mu-) and the
  complementary (nu, nu) channel resonates at harmonic -alpha with the same
  strength.  ``two_channel=True`` keeps both.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .bosonic import bessel_j, displaced_diag_element
from .cat_frame import E_delta, coefficient_functions
from .model import ModelParams

__all__ = [
    "TwoLevelSpectral", "ResonanceSolution", "RwaGate", "NoResonanceError",
    "spectral_decompose", "Q_of_t", "appendix_hamiltonian", "appendix_propagator",
    "Un_Vn", "resonance_function", "find_resonances", "solve_resonance", "resonance_at",
    "odd_weight", "rwa_reduce", "gate_unitary", "block_generator", "block_equations_rhs",
    "solve_block_equations", "averaged_block_generator", "off_resonant_transfer_bound",
    "CHANNELS",
]

CHANNELS = ("mu", "nu")
_SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])


class NoResonanceError(RuntimeError):
    """No root of the resonance condition in the searched interval."""


@dataclass(frozen=True, eq=False)
class TwoLevelSpectral:
    """Eigen-data of A = [[0, alpha], [alpha, theta]]; P columns are (mu, nu)."""

    alpha: float
    theta: float
    mu: float
    nu: float
    P: np.ndarray

    def column(self, which: str) -> np.ndarray:
        return self.P[:, CHANNELS.index(which)]

    def eigenvalue(self, which: str) -> float:
        return self.mu if which == "mu" else self.nu


def spectral_decompose(alpha: float, theta: float) -> TwoLevelSpectral:
    alpha, theta = float(alpha), float(theta)
    if alpha == 0.0 or alpha / max(abs(alpha), abs(theta)) == 0.0:
        mu, nu = max(theta, 0.0), min(theta, 0.0)
        P = np.array([[0.0, 1.0], [1.0, 0.0]]) if theta > 0 else np.eye(2)
        return TwoLevelSpectral(alpha, theta, mu, nu, P)
    # work in units of max(|alpha|, |theta|) so tiny couplings do not underflow;
    # the small root comes from the product mu nu = -alpha^2 to avoid cancellation
    s = max(abs(alpha), abs(theta))
    a, th = alpha / s, theta / s
    rs = math.hypot(th, 2.0 * a)
    if th >= 0:
        ms = 0.5 * (th + rs)
        ns = -a * (a / ms)
    else:
        ns = 0.5 * (th - rs)
        ms = -a * (a / ns)
    mu, nu = s * ms, s * ns
    P = np.array([[a / math.hypot(a, ms), a / math.hypot(a, ns)],
                  [ms / math.hypot(a, ms), ns / math.hypot(a, ns)]])
    return TwoLevelSpectral(alpha, theta, mu, nu, P)


def Q_of_t(spec: TwoLevelSpectral, t) -> np.ndarray:
    """exp(-i t A) = P diag(e^{-i t mu}, e^{-i t nu}) P^T; t may be an array."""
    t = np.asarray(t, dtype=float)
    ph = np.stack([np.exp(-1j * t * spec.mu), np.exp(-1j * t * spec.nu)], axis=-1)
    return np.einsum("ik,...k,jk->...ij", spec.P, ph, spec.P)


def appendix_hamiltonian(alpha: float, theta: float, t: float) -> np.ndarray:
    return np.array([[0.0, alpha * np.exp(-1j * theta * t)],
                     [alpha * np.exp(1j * theta * t), 0.0]])


def _appendix_from_spec(spec: TwoLevelSpectral, t):
    t = np.asarray(t, dtype=float)
    Q = Q_of_t(spec, t)
    lead = np.stack([np.ones_like(t, dtype=complex), np.exp(1j * spec.theta * t)], axis=-1)
    return lead[..., :, None] * Q


def appendix_propagator(alpha: float, theta: float, t) -> np.ndarray:
    """U(t) = diag(1, e^{i theta t}) exp(-i t [[0, alpha], [alpha, theta]])."""
    return _appendix_from_spec(spectral_decompose(alpha, theta), t)


def Un_Vn(n: int, params: ModelParams, t):
    g = params.gamma
    return (appendix_propagator(E_delta(n, params, +1), g, t),
            appendix_propagator(E_delta(n, params, -1), g, t))


def _energies(n, params, omega2):
    """E+, E- as arrays over omega2 (E- carries J0(2 g2 / omega2))."""
    eps = 0.5 * params.delta * displaced_diag_element(n, params.x)
    j1 = bessel_j(0, params.gammas[0])
    omega2 = np.asarray(omega2, dtype=float)
    j2 = bessel_j(0, 2.0 * params.g2 / omega2) if params.g2 > 0 else np.ones_like(omega2)
    return eps * (j1 + j2), eps * (j1 - j2)


def _branch(E, g, which):
    r = np.sqrt(g * g + 4.0 * np.asarray(E) ** 2)
    return 0.5 * (g + r) if which == "mu" else 0.5 * (g - r)


def resonance_function(n: int, params: ModelParams, alpha: int, omega2, channel=("mu", "mu")):
    """f(omega2) = alpha omega2 + s+(omega2) - s-(omega2), both branches recomputed."""
    Ep, Em = _energies(n, params, omega2)
    g = params.gamma
    f = alpha * np.asarray(omega2, dtype=float) + _branch(Ep, g, channel[0]) - _branch(Em, g, channel[1])
    return float(f) if np.ndim(f) == 0 else f


@dataclass(frozen=True, eq=False)
class ResonanceSolution:
    n: int
    alpha_harmonic: int
    omega2: float
    spectral_plus: TwoLevelSpectral
    spectral_minus: TwoLevelSpectral
    E_plus: float
    E_minus: float
    gamma2: float
    residual: float
    channel: tuple = ("mu", "mu")

    def apply(self, params: ModelParams) -> ModelParams:
        """params with omega_2 set to the resonant value."""
        return params.with_drive(2, self.omega2)


def _check_channel(channel):
    channel = tuple(channel)
    if len(channel) != 2 or any(c not in CHANNELS for c in channel):
        raise ValueError(f"channel must be a pair over {CHANNELS}")
    return channel


def resonance_at(n: int, params: ModelParams, alpha: int, omega2: float = None,
                 channel=("mu", "mu")) -> ResonanceSolution:
    """Spectral data at a given omega2 (default: the one in params), no root solve."""
    if params.m != 2:
        raise ValueError("resonance analysis needs m=2")
    channel = _check_channel(channel)
    omega2 = params.drive_freqs[1] if omega2 is None else float(omega2)
    p = params.with_drive(2, omega2)
    Ep, Em = E_delta(n, p, +1), E_delta(n, p, -1)
    sp, sm = spectral_decompose(Ep, p.gamma), spectral_decompose(Em, p.gamma)
    res = alpha * omega2 + sp.eigenvalue(channel[0]) - sm.eigenvalue(channel[1])
    return ResonanceSolution(n, int(alpha), omega2, sp, sm, Ep, Em, 2 * p.g2 / omega2,
                             float(res), channel)


def _grid(params, lo, hi, gamma_step, max_points):
    pts = [np.geomspace(lo, hi, 4001)]
    if params.g2 > 0:
        G_lo, G_hi = 2 * params.g2 / hi, 2 * params.g2 / lo
        count = int(min(max_points, math.ceil((G_hi - G_lo) / gamma_step) + 1))
        pts.append(2 * params.g2 / np.linspace(G_hi, G_lo, max(count, 2)))
    grid = np.unique(np.concatenate(pts))
    return grid[(grid >= lo) & (grid <= hi)]


def find_resonances(n: int, params: ModelParams, alpha: int, omega2_min: float = None,
                    omega2_max: float = None, channel=("mu", "mu"), gamma_step: float = 0.1,
                    gamma_max: float = 1.0e4, max_points: int = 4_000_000, tol: float = 1e-10):
    """All roots of the resonance condition in [omega2_min, omega2_max], ascending.

    The condition oscillates with Gamma2 = 2 g2 / omega2, so the scan grid is
    uniform in Gamma2 (step ``gamma_step``) plus a geometric grid in omega2;
    each sign change is refined with Brent's method.
    """
    if params.m != 2:
        raise ValueError("resonance analysis needs m=2")
    alpha = int(alpha)
    if alpha == 0:
        raise ValueError("alpha_harmonic must be nonzero")
    channel = _check_channel(channel)
    eps = 0.5 * params.delta * displaced_diag_element(n, params.x)
    if eps == 0.0:
        raise NoResonanceError("Delta <n|D(x)|n> = 0: E+ = E- = 0 and the condition reduces "
                               "to alpha omega2 = 0, which has no positive root")
    if omega2_max is None:
        span = 4 * abs(eps) + (0.0 if channel[0] == channel[1] else params.gamma)
        omega2_max = 1.01 * span / abs(alpha)
    if omega2_min is None:
        omega2_min = 2 * params.g2 / gamma_max if params.g2 > 0 else omega2_max * 1e-9
        if omega2_min >= omega2_max:
            return []           # Gamma2 <= gamma_max already excludes every candidate
    if not 0 < omega2_min < omega2_max:
        raise ValueError("need 0 < omega2_min < omega2_max")
    grid = _grid(params, omega2_min, omega2_max, gamma_step, max_points)
    f = resonance_function(n, params, alpha, grid, channel)
    roots = []
    exact = np.flatnonzero(f == 0.0)
    roots.extend(grid[exact])
    change = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
    func = lambda w: resonance_function(n, params, alpha, w, channel)
    for k in change:
        a, b = grid[k], grid[k + 1]
        roots.append(brentq(func, a, b, xtol=a * 1e-15, rtol=1e-15, maxiter=200))
    out = []
    for w in sorted(set(roots)):
        sol = resonance_at(n, params, alpha, w, channel)
        if abs(sol.residual) < tol:
            out.append(sol)
    return out


def odd_weight(alpha: int, Gamma: float) -> float:
    """(J_alpha(Gamma) - J_alpha(-Gamma)) / 2."""
    return 0.5 * (bessel_j(alpha, Gamma) - bessel_j(alpha, -Gamma))


def solve_resonance(n: int, params: ModelParams, alpha_harmonic: int, select="strongest",
                    **kwargs) -> ResonanceSolution:
    """One root: 'strongest' (largest |R|), 'lowest', 'highest' or an index."""
    roots = find_resonances(n, params, alpha_harmonic, **kwargs)
    if not roots:
        raise NoResonanceError(f"harmonic alpha={alpha_harmonic} has no root in the searched interval")
    if select == "strongest":
        return max(roots, key=lambda s: abs(rwa_reduce(n, params, s, warn=False).rabi_rate))
    if select == "lowest":
        return roots[0]
    if select == "highest":
        return roots[-1]
    return roots[int(select)]


def _complement(which):
    return "nu" if which == "mu" else "mu"


@dataclass(frozen=True, eq=False)
class RwaGate:
    rabi_rate: float
    K: np.ndarray
    resonance: ResonanceSolution
    prefactor: float
    odd_weight: float
    coupling: float              # v+^T sigma1 v- for the selected channel
    partner_coupling: float      # same for the complementary channel
    K_partner: np.ndarray
    trivial: bool

    def gate(self, t):
        return gate_unitary(self, t)

    @property
    def K_two_channel(self) -> np.ndarray:
        """K - (a'/a) K' with a', K' from the complementary channel (resonant at -alpha)."""
        if self.coupling == 0.0:
            return np.zeros((2, 2))
        return self.K - (self.partner_coupling / self.coupling) * self.K_partner

    def effective_generator(self, two_channel: bool = True) -> np.ndarray:
        """Derived time-independent RWA generator G, i dc/dt = G c (block order)."""
        Kx = self.K_two_channel if two_channel else self.K
        G = np.zeros((4, 4))
        G[:2, 2:] = Kx
        G[2:, :2] = Kx.T
        return -self.rabi_rate * G

    def propagator(self, t, two_channel: bool = True) -> np.ndarray:
        return scipy.linalg.expm(-1j * t * self.effective_generator(two_channel))


def rwa_reduce(n: int, params: ModelParams, resonance: ResonanceSolution,
               warn: bool = True) -> RwaGate:
    alpha = resonance.alpha_harmonic
    a_ch, b_ch = resonance.channel
    p = resonance.apply(params)
    eps = 0.5 * p.delta * displaced_diag_element(n, p.x)
    b = odd_weight(alpha, resonance.gamma2)
    if alpha % 2 == 0:
        b = 0.0
        if warn:
            warnings.warn(f"even harmonic alpha={alpha}: odd Bessel weight vanishes, R = 0",
                          RuntimeWarning, stacklevel=2)
    sp, sm = resonance.spectral_plus, resonance.spectral_minus
    vp, vm = sp.column(a_ch), sm.column(b_ch)
    wp, wm = sp.column(_complement(a_ch)), sm.column(_complement(b_ch))
    a = float(vp @ _SIGMA1 @ vm)
    a2 = float(wp @ _SIGMA1 @ wm)
    R = eps * b * a
    return RwaGate(R, np.outer(vp, vm), resonance, eps, b, a, a2, np.outer(wp, wm),
                   trivial=(R == 0.0))


def off_resonant_transfer_bound(n: int, params: ModelParams, resonance: ResonanceSolution,
                                cutoff: int = None) -> float:
    """Sum over harmonics and channels of the two-level maximum 4g^2 / (4g^2 + delta^2).

    Counts every odd harmonic except the resonant pair itself (alpha on the
    selected channel, -alpha on its complement); estimates the transfer the
    rotating-wave gate leaves out.
    """
    p = resonance.apply(params)
    eps = 0.5 * p.delta * displaced_diag_element(n, p.x)
    sp, sm = resonance.spectral_plus, resonance.spectral_minus
    G2 = resonance.gamma2
    cutoff = max(41, int(3 * G2) + 1) if cutoff is None else cutoff
    a0, (c0, d0) = resonance.alpha_harmonic, resonance.channel
    skip = {(a0, c0, d0), (-a0, _complement(c0), _complement(d0))}
    total = 0.0
    for a in range(-cutoff, cutoff + 1):
        if a % 2 == 0:
            continue
        b = odd_weight(a, G2)
        for cp in CHANNELS:
            for cm in CHANNELS:
                if (a, cp, cm) in skip and a0 % 2:
                    continue
                g = eps * b * float(sp.column(cp) @ _SIGMA1 @ sm.column(cm))
                d = a * resonance.omega2 + sp.eigenvalue(cp) - sm.eigenvalue(cm)
                if g != 0.0:
                    total += 4 * g * g / (4 * g * g + d * d)
    return total


def gate_unitary(gate: RwaGate, t: float) -> np.ndarray:
    """Closed form over (c1, c3, c2, c4) with angle R t / 2."""
    K = gate.K
    KKt, KtK = K @ K.T, K.T @ K
    c, s = math.cos(gate.rabi_rate * t / 2), math.sin(gate.rabi_rate * t / 2)
    U = np.empty((4, 4), dtype=complex)
    U[:2, :2] = np.eye(2) - KKt + c * KKt
    U[:2, 2:] = 1j * s * K
    U[2:, :2] = 1j * s * K.T
    U[2:, 2:] = np.eye(2) - KtK + c * KtK
    return U


class _BlockFrame:
    """Cached pieces of W(t) = blockdiag(U_n, V_n)."""

    def __init__(self, n, params, cutoff=None):
        self.params = params
        self.coeffs = coefficient_functions(n, params, cutoff)
        g = params.gamma
        self.sp = spectral_decompose(E_delta(n, params, +1), g)
        self.sm = spectral_decompose(E_delta(n, params, -1), g)

    def W(self, t):
        W = np.zeros((4, 4), dtype=complex)
        W[:2, :2] = _appendix_from_spec(self.sp, t)
        W[2:, 2:] = _appendix_from_spec(self.sm, t)
        return W

    def H1(self, t, closed_form):
        A, B, C, D = self.coeffs(t, exact=closed_form)
        u = np.exp(-1j * t * self.params.gamma)
        H = np.zeros((4, 4), dtype=complex)
        # block order (Phi1, Phi3, Phi2, Phi4)
        H[0, 1], H[0, 3], H[2, 1], H[2, 3] = u * A, u * B, u * C, u * D
        return H + H.conj().T

    def generator(self, t, closed_form=False):
        W = self.W(t)
        return W.conj().T @ self.H1(t, closed_form) @ W

    def generator_many(self, ts):
        """G(t) for an array of times (closed-form coefficients), shape (T, 4, 4)."""
        ts = np.asarray(ts, dtype=float)
        W = np.zeros((ts.size, 4, 4), dtype=complex)
        W[:, :2, :2] = _appendix_from_spec(self.sp, ts)
        W[:, 2:, 2:] = _appendix_from_spec(self.sm, ts)
        A, B, C, D = self.coeffs(ts, exact=True)
        u = np.exp(-1j * ts * self.params.gamma)
        H = np.zeros((ts.size, 4, 4), dtype=complex)
        H[:, 0, 1], H[:, 0, 3], H[:, 2, 1], H[:, 2, 3] = u * A, u * B, u * C, u * D
        H = H + np.conj(np.swapaxes(H, 1, 2))
        return np.conj(np.swapaxes(W, 1, 2)) @ H @ W


def block_generator(n: int, params: ModelParams, t: float, cutoff: int = None,
                    closed_form: bool = False) -> np.ndarray:
    """W^dag (Delta/2) d_n K1F' W in block order; i dc/dt = G(t) c."""
    return _BlockFrame(n, params, cutoff).generator(t, closed_form)


def averaged_block_generator(n: int, params: ModelParams, duration: float,
                             samples: int = 200_001, chunk: int = 50_000) -> np.ndarray:
    """Blackman-windowed time average of G(t) over [0, duration]."""
    frame = _BlockFrame(n, params)
    ts = np.linspace(0.0, duration, samples)
    win = np.blackman(samples)
    acc = np.zeros((4, 4), dtype=complex)
    for k in range(0, samples, chunk):
        sl = slice(k, k + chunk)
        acc += np.einsum("t,tij->ij", win[sl], frame.generator_many(ts[sl]))
    return acc / win.sum()


def block_equations_rhs(n: int, params: ModelParams, t: float, c, cutoff: int = None,
                        closed_form: bool = False) -> np.ndarray:
    return -1j * block_generator(n, params, t, cutoff, closed_form) @ np.asarray(c, dtype=complex)


def solve_block_equations(n: int, params: ModelParams, c0, t_eval, rtol: float = 1e-9,
                          atol: float = 1e-11):
    """Integrate the exact (pre-RWA) block equations; returns c at t_eval (rows)."""
    frame = _BlockFrame(n, params)
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(lambda t, c: -1j * (frame.generator(t, True) @ c), (t_eval[0], t_eval[-1]),
                    np.asarray(c0, dtype=complex), method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"block integration failed at t={sol.t[-1]:g}: {sol.message}")
    return sol.y.T
