"""Brute-force Schrodinger integration and the RWA comparison harness.

Two routes to the same dynamics:

lab
    i dpsi/dt = H_L(t) psi on spin (x) Fock; static part cached, drives
    re-assembled per stage.
interaction
    dressed-basis coordinates c_k = e^{i phi_k(t)} <k|psi> with
    i dc/dt = (Delta/2) H_F(t) c, restricted to n < n_keep.

States in a Trajectory are always lab-frame vectors.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import curve_fit

from .bosonic import FockTruncation
from .cat_frame import BLOCK_ORDER, CAT_FROM_PRODUCT, E_delta, cat_basis, dropped_norm
from .model import ModelParams, dressed_basis, dressed_phases, hamiltonian_parts
from .rwa import (ResonanceSolution, RwaGate, _appendix_from_spec, off_resonant_transfer_bound,
                  rwa_reduce, spectral_decompose)
from .spin import sigma_sum

__all__ = [
    "Trajectory", "ComparisonReport", "IntegrationError", "IntegrationBudgetExceeded",
    "RegimeError", "integrate", "populations", "to_interaction", "from_interaction",
    "compare_rwa", "fit_rabi", "NORM_TOLERANCE",
]

NORM_TOLERANCE = 1e-10


class IntegrationError(RuntimeError):
    def __init__(self, message, t_fail):
        super().__init__(f"{message} (t={t_fail:.17g})")
        self.t_fail = t_fail


class IntegrationBudgetExceeded(RuntimeError):
    def __init__(self, t_reached, t_end, elapsed):
        frac = (t_reached - 0.0) / t_end if t_end else 0.0
        super().__init__(f"wall-clock budget exhausted after {elapsed:.1f}s at t={t_reached:.6g} "
                         f"of {t_end:.6g} ({100 * frac:.3g}%)")
        self.t_reached, self.t_end, self.elapsed = t_reached, t_end, elapsed

    @property
    def projected_seconds(self) -> float:
        return self.elapsed * self.t_end / max(self.t_reached, 1e-300)


class RegimeError(ValueError):
    """Parameters outside the strong-coupling regime."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norm_drift: float
    renormalizations: tuple = ()
    frame: str = "lab"
    coords: np.ndarray = None       # interaction-frame dressed coordinates
    n_keep: int = None
    nfev: int = 0


def _interaction_setup(params, trunc, n_keep):
    basis = dressed_basis(params, trunc, n_keep)
    V = basis.vectors
    S3 = np.kron(sigma_sum(params.m, 3), np.eye(trunc.dim))
    M = V.T @ S3 @ V
    return basis, V, 0.5 * params.delta * M


def to_interaction(params, trunc, t, psi, n_keep=None):
    basis = dressed_basis(params, trunc, n_keep)
    return np.exp(1j * dressed_phases(basis, params, t)) * (basis.vectors.T @ psi)


def from_interaction(params, trunc, t, c, n_keep=None):
    basis = dressed_basis(params, trunc, n_keep)
    return basis.vectors @ (np.exp(-1j * dressed_phases(basis, params, t)) * c)


def integrate(params: ModelParams, trunc: FockTruncation, psi0, t_span, tol: float = 1e-9, *,
              t_eval=None, frame: str = "lab", n_keep: int = None, atol: float = None,
              max_wall_time: float = None) -> Trajectory:
    """Integrate i dpsi/dt = H_L psi with DOP853 (rtol = tol).

    Renormalises only when the norm drifts by more than 1e-10, and records
    each such event as (t, drift).
    """
    if params.algebra != "N":
        raise ValueError("time evolution is only available for the N algebra")
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-8:
        raise ValueError("psi0 must be normalised")
    t_eval = np.linspace(t0, t1, 101) if t_eval is None else np.asarray(t_eval, dtype=float)
    if t_eval[0] != t0 or t_eval[-1] != t1 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must increase strictly from t_span[0] to t_span[1]")
    atol = tol * 1e-2 if atol is None else atol

    static, s3, drives = hamiltonian_parts(params, trunc)
    if frame == "lab":
        Hs = static + 0.5 * params.delta * s3
        w = np.asarray(params.drive_freqs)
        ph = np.asarray(params.drive_phases)
        drive_ops = [-1j * params.g2 * D for D in drives]
        Hs = -1j * Hs

        def rhs(t, y):
            out = Hs @ y
            for c, D in zip(np.cos(w * t + ph), drive_ops):
                out += c * (D @ y)
            return out
        y0 = psi0
    elif frame == "interaction":
        basis, V, M = _interaction_setup(params, trunc, n_keep)
        y0 = to_interaction(params, trunc, t0, psi0, n_keep)
        if abs(np.linalg.norm(y0) - 1.0) > 1e-8:
            raise ValueError("psi0 has weight outside the kept dressed states")
        Mi = -1j * M

        def rhs(t, y):
            p = np.exp(1j * dressed_phases(basis, params, t))
            return p * (Mi @ (p.conj() * y))
    else:
        raise ValueError("frame must be 'lab' or 'interaction'")

    start = time.perf_counter()
    out = np.empty((t_eval.size, y0.size), dtype=complex)
    out[0] = y0
    renorm = []
    solver = DOP853(rhs, t0, y0, t1, rtol=tol, atol=atol)
    nfev, k = 0, 1
    while k < t_eval.size:
        if max_wall_time is not None and time.perf_counter() - start > max_wall_time:
            raise IntegrationBudgetExceeded(solver.t, t1 - t0, time.perf_counter() - start)
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integrator failed: {msg}", solver.t)
        dense = solver.dense_output()
        while k < t_eval.size and t_eval[k] <= solver.t:
            out[k] = dense(t_eval[k])
            k += 1
        nrm = np.linalg.norm(solver.y)
        if abs(nrm - 1.0) > NORM_TOLERANCE and solver.status == "running":
            renorm.append((float(solver.t), float(nrm - 1.0)))
            h = solver.step_size
            nfev += solver.nfev
            solver = DOP853(rhs, solver.t, solver.y / nrm, t1, rtol=tol, atol=atol, first_step=h)
    nfev += solver.nfev
    coords = None
    if frame == "interaction":
        coords = out
        states = np.stack([from_interaction(params, trunc, t, c, n_keep) for t, c in zip(t_eval, out)])
    else:
        states = out
    drift = float(np.max(np.abs(np.linalg.norm(out, axis=1) - 1.0)))
    return Trajectory(t_eval, states, drift, tuple(renorm), frame, coords,
                      None if frame == "lab" else basis.n_keep, nfev)


def populations(traj: Trajectory, basis) -> np.ndarray:
    """|<b_i|psi(t)>|^2 with shape (len(times), len(basis))."""
    B = np.column_stack([np.asarray(b, dtype=complex) for b in basis])
    if np.any(np.abs(np.linalg.norm(B, axis=0) - 1.0) > 1e-8):
        raise ValueError("basis vectors must be normalised")
    return np.abs(traj.states @ B.conj()) ** 2


def _cos2(t, A, f, B):
    return A * np.cos(0.5 * f * t) ** 2 + B


def fit_rabi(t, y, guesses=()):
    """Least-squares fit of A cos^2(f t / 2) + B; returns (A, f, B, rms)."""
    t, y = np.asarray(t, float), np.asarray(y, float)
    span = t[-1] - t[0]
    amp = y.max() - y.min()
    if amp < 1e-9:
        return 0.0, 0.0, float(y.mean()), float(np.std(y))
    spec = np.abs(np.fft.rfft(y - y.mean()))
    kpk = int(np.argmax(spec[1:]) + 1)
    cands = [2 * math.pi * kpk / span] + [abs(g) for g in guesses if g]
    best = None
    for f0 in cands:
        for sgn in (1, -1):
            p0 = (sgn * amp, f0, y.min() if sgn > 0 else y.max())
            try:
                p, _ = curve_fit(_cos2, t, y, p0=p0, maxfev=20000)
            except RuntimeError:
                continue
            rms = float(np.sqrt(np.mean((_cos2(t, *p) - y) ** 2)))
            if best is None or rms < best[3]:
                best = (float(p[0]), float(abs(p[1])), float(p[2]), rms)
    if best is None:
        raise RuntimeError("Rabi fit did not converge")
    A, f, B, rms = best
    if A < 0:
        # A cos^2 + B with A < 0 is the same curve as |A| sin^2 + (A + B); keep the
        # transfer depth positive, the frequency is unaffected
        A, B = -A, B + A
    return A, f, B, rms


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    resonance: ResonanceSolution
    rabi_rate: float
    amplitude_error: float          # max |P - P_closed_form| / transfer weight
    phase_error: float              # |f_fit - |R|| / |R|
    dropped_HF2_norm: float
    times: np.ndarray
    exact_population: np.ndarray    # |c1|^2 + |c3|^2
    predicted_population: np.ndarray
    predicted_two_channel: np.ndarray
    fit: tuple                      # (A, f, B, rms)
    transfer_weight: float
    two_channel_weight: float
    fit_amplitude_error: float
    max_deviation_two_channel: float
    fit_amplitude_error_two_channel: float
    frequency_error_two_channel: float
    initial_cat: int
    gate: RwaGate = None
    off_resonant_bound: float = 0.0   # transfer the gate leaves out (estimate)
    renormalizations: tuple = ()
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "rabi_rate": self.rabi_rate,
            "omega2": self.resonance.omega2,
            "amplitude_error": self.amplitude_error,
            "phase_error": self.phase_error,
            "dropped_HF2_norm": self.dropped_HF2_norm,
            "off_resonant_bound": self.off_resonant_bound,
            "fit_amplitude": self.fit[0],
            "fit_frequency": self.fit[1],
            "transfer_weight": self.transfer_weight,
            "fit_amplitude_error": self.fit_amplitude_error,
            "two_channel_weight": self.two_channel_weight,
            "max_deviation_two_channel": self.max_deviation_two_channel,
            "fit_amplitude_error_two_channel": self.fit_amplitude_error_two_channel,
            "frequency_error_two_channel": self.frequency_error_two_channel,
        }


def block_amplitudes(traj: Trajectory, params: ModelParams, n: int) -> np.ndarray:
    """Gate-frame amplitudes (c1, c3, c2, c4) at each sample of an interaction run."""
    if traj.coords is None:
        raise ValueError("need an interaction-frame trajectory")
    cols = [lab_index * traj.n_keep + n for lab_index in range(4)]
    phi = traj.coords[:, cols] @ CAT_FROM_PRODUCT.T
    b = phi[:, list(BLOCK_ORDER)]
    sp = spectral_decompose(E_delta(n, params, +1), params.gamma)
    sm = spectral_decompose(E_delta(n, params, -1), params.gamma)
    Up = _appendix_from_spec(sp, traj.times)
    Um = _appendix_from_spec(sm, traj.times)
    c = np.empty_like(b)
    c[:, :2] = np.einsum("tji,tj->ti", Up.conj(), b[:, :2])
    c[:, 2:] = np.einsum("tji,tj->ti", Um.conj(), b[:, 2:])
    return c


def compare_rwa(params: ModelParams, resonance: ResonanceSolution, n: int = 0, periods: int = 1,
                trunc: FockTruncation = None, *, t_end: float = None, initial: int = 1,
                samples: int = 801, tol: float = 1e-9, n_keep: int = None,
                max_wall_time: float = None) -> ComparisonReport:
    """Exact dynamics from a cat state vs the closed-form gate.

    The exact run is done in the interaction frame; the odd-block population
    |c1|^2 + |c3|^2 is compared with the closed form (angle R t / 2, single
    channel) and with the derived two-channel generator.
    """
    if not params.strong_coupling:
        ratio = params.g1 / abs(params.delta) if params.delta else math.inf
        raise RegimeError(f"g1/|Delta| = {ratio:.3g} is below the strong-coupling threshold "
                          f"{params.strong_ratio:g}")
    if initial not in (1, 2, 3, 4):
        raise ValueError("initial cat index must be 1..4")
    trunc = FockTruncation(48, 12) if trunc is None else trunc
    p = resonance.apply(params)
    gate = rwa_reduce(n, p, resonance, warn=False)
    R = gate.rabi_rate
    if t_end is None:
        if R == 0.0:
            raise ValueError("R = 0: pass t_end explicitly")
        t_end = periods * 2 * math.pi / abs(R)
    times = np.linspace(0.0, t_end, samples)
    psi0 = cat_basis(n, p, trunc)[initial - 1].vector
    start = time.perf_counter()
    traj = integrate(p, trunc, psi0, (0.0, t_end), tol, t_eval=times, frame="interaction",
                     n_keep=n_keep, max_wall_time=max_wall_time)
    wall = time.perf_counter() - start
    c = block_amplitudes(traj, p, n)
    P = np.sum(np.abs(c[:, :2]) ** 2, axis=1)

    c0 = np.zeros(4, dtype=complex)
    c0[BLOCK_ORDER.index(initial - 1)] = 1.0
    Uclosed = np.stack([gate.gate(t) for t in times])
    P_closed = np.sum(np.abs(Uclosed @ c0)[:, :2] ** 2, axis=1)
    G = gate.effective_generator(two_channel=True)
    evals, evecs = np.linalg.eigh(G)
    amp = evecs.conj().T @ c0
    c2 = np.einsum("ik,tk->ti", evecs, np.exp(-1j * np.outer(times, evals)) * amp)
    P_two = np.sum(np.abs(c2[:, :2]) ** 2, axis=1)

    odd = initial in (1, 3)
    c_od = c0[:2] if odd else c0[2:]
    K = gate.K if odd else gate.K.T
    K2 = gate.K_two_channel if odd else gate.K_two_channel.T
    w = float(np.linalg.norm(K.T @ c_od) ** 2)
    w2 = float(np.linalg.norm(K2.T @ c_od) ** 2)
    fit = fit_rabi(times, P, guesses=(R, 2 * R))
    dev = float(np.max(np.abs(P - P_closed)))
    amplitude_error = dev / w if w > 1e-12 else dev
    if R != 0.0:
        phase_error = abs(fit[1] - abs(R)) / abs(R)
        freq2 = abs(fit[1] - 2 * abs(R)) / (2 * abs(R))
    else:
        phase_error = freq2 = 0.0 if fit[0] < 1e-6 else fit[1] * t_end / (2 * math.pi)
    dev2 = float(np.max(np.abs(P - P_two)))
    dropped = dropped_norm(p, trunc, n, traj.n_keep)
    bound = off_resonant_transfer_bound(n, p, resonance) + 4 * (dropped / p.omega) ** 2
    return ComparisonReport(
        resonance=resonance, rabi_rate=R, amplitude_error=amplitude_error, phase_error=phase_error,
        dropped_HF2_norm=dropped, times=times, exact_population=P,
        predicted_population=P_closed, predicted_two_channel=P_two, fit=fit, transfer_weight=w,
        two_channel_weight=w2,
        fit_amplitude_error=abs(fit[0] - w) / w if w > 1e-12 else abs(fit[0]),
        max_deviation_two_channel=dev2 / w2 if w2 > 1e-12 else dev2,
        fit_amplitude_error_two_channel=abs(fit[0] - w2) / w2 if w2 > 1e-12 else abs(fit[0]),
        frequency_error_two_channel=freq2, initial_cat=initial, gate=gate, off_resonant_bound=bound,
        renormalizations=traj.renormalizations, wall_time=wall)
