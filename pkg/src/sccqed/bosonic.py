"""Truncated boson mode, displacement operators and Bessel machinery.

Everything here is a pure function of its arguments.  Displacement
matrices are memoised (read-only arrays) because the dressed basis asks
for the same handful of them over and over.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.special

__all__ = [
    "FockTruncation",
    "TruncationError",
    "BesselSeries",
    "ladder_operators",
    "displacement",
    "displaced_element",
    "displaced_diag_element",
    "laguerre",
    "truncation_sound",
    "bessel_j",
    "bessel_table",
    "bessel_series",
    "bessel_tail_bound",
    "jacobi_anger",
    "default_cutoff",
]

# above this |z| the Miller start index gets long; hand over to scipy
MILLER_MAX_ARG = 64.0
# below this |z| the two-term power series is exact to rounding
SERIES_MAX_ARG = 1e-6
# fraction of dim that theta**2 may reach before the cutoff is untrustworthy
DISPLACEMENT_FRACTION = 0.25


class TruncationError(ValueError):
    """The Fock cutoff is too small for the requested displacement."""


@dataclass(frozen=True)
class FockTruncation:
    """Fock cutoff ``dim`` plus a top ``buffer`` excluded from identity checks."""

    dim: int
    buffer: int = 0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if int(self.buffer) != self.buffer or not 0 <= self.buffer < self.dim:
            raise ValueError(f"buffer must satisfy 0 <= buffer < dim, got {self.buffer}")

    @property
    def trusted(self) -> int:
        """Size of the leading block on which identities are asserted."""
        return self.dim - self.buffer

    @property
    def inner(self) -> int:
        """Block for checks on sums over dressed states with n < trusted.

        A dressed state near the top of the trusted block spreads upward by
        up to ``buffer`` levels, so such sums are only complete one buffer lower.
        """
        return max(1, self.dim - 2 * self.buffer)


def ladder_operators(trunc: FockTruncation):
    """Return (a, a_dagger, N) as dense float matrices."""
    a = np.diag(np.sqrt(np.arange(1, trunc.dim, dtype=float)), 1)
    N = np.diag(np.arange(trunc.dim, dtype=float))
    return a, a.T.copy(), N


@lru_cache(maxsize=256)
def _displacement_cached(dim: int, theta: float) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    D = scipy.linalg.expm(theta * (a.T - a))
    D.flags.writeable = False
    return D


def displacement(trunc: FockTruncation, theta: float,
                 fraction: float = DISPLACEMENT_FRACTION) -> np.ndarray:
    """exp(theta (a^dagger - a)) on the truncated space (read-only array).

    Raises TruncationError when theta**2 > fraction * dim.
    """
    theta = float(theta)
    if theta * theta > fraction * trunc.dim:
        raise TruncationError(
            f"displacement theta={theta:g} too large for dim={trunc.dim} "
            f"(theta^2 must stay <= {fraction:g}*dim)")
    if theta == 0.0:
        D = np.eye(trunc.dim)
        D.flags.writeable = False
        return D
    return _displacement_cached(trunc.dim, theta)


def displaced_element(n: int, n2: int, x: float, trunc: FockTruncation) -> float:
    """<n| exp(x (a^dagger - a)) |n2>, read off the displacement matrix."""
    return float(displacement(trunc, x)[n, n2])


def laguerre(n: int, y):
    """L_n(y) by the three-term recurrence (vectorised over y)."""
    y = np.asarray(y, dtype=float)
    prev = np.ones_like(y)
    if n == 0:
        return prev
    cur = 1.0 - y
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - y) * cur - k * prev) / (k + 1)
    return cur


def displaced_diag_element(n: int, x):
    """<n|exp(x(a^dagger - a))|n> = exp(-x^2/2) L_n(x^2)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    x = np.asarray(x, dtype=float)
    y = x * x
    out = np.exp(-0.5 * y) * laguerre(n, y)
    return float(out) if out.ndim == 0 else out


def truncation_sound(trunc: FockTruncation, x: float, n_max: int) -> bool:
    """Soundness rule x^2 (n_max + 1) <= dim / 4."""
    return x * x * (n_max + 1) <= trunc.dim / 4.0


def _miller(z: np.ndarray, top: int) -> np.ndarray:
    """J_0..J_top at positive arguments z (1-D) by backward recurrence.

    Normalised with J_0 + 2 sum_k J_2k = 1.  Rows are orders.
    """
    zmax = float(z.max())
    start = top + int(zmax) + 24 + int(8 * zmax ** (1.0 / 3.0))
    start += start % 2
    out = np.zeros((top + 1, z.size))
    f_next = np.zeros_like(z)
    f_cur = np.full_like(z, 1e-300)
    norm = np.zeros_like(z)
    for k in range(start, 0, -1):
        # f_{k-1} = (2k/z) f_k - f_{k+1}
        f_prev = (2.0 * k / z) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        km1 = k - 1
        if km1 <= top:
            out[km1] = f_cur
        if km1 % 2 == 0 and km1 > 0:
            norm += 2.0 * f_cur
        big = np.abs(f_cur) > 1e250
        if big.any():
            s = np.where(big, 1e-250, 1.0)
            f_cur = f_cur * s
            f_next = f_next * s
            norm = norm * s
            out[km1:] *= s
    norm += f_cur
    return out / norm


def _miller_scalar(z: float, top: int) -> list:
    """Plain-float version of ``_miller`` for a single positive argument."""
    start = top + int(z) + 24 + int(8 * z ** (1.0 / 3.0))
    start += start % 2
    out = [0.0] * (top + 1)
    f_next, f_cur, norm = 0.0, 1e-300, 0.0
    for k in range(start, 0, -1):
        f_next, f_cur = f_cur, (2.0 * k / z) * f_cur - f_next
        if k - 1 <= top:
            out[k - 1] = f_cur
        if (k - 1) % 2 == 0 and k > 1:
            norm += 2.0 * f_cur
        if abs(f_cur) > 1e250:
            f_cur *= 1e-250
            f_next *= 1e-250
            norm *= 1e-250
            out = [v * 1e-250 for v in out]
    norm += f_cur
    return [v / norm for v in out]


def _series_small(z: np.ndarray, top: int) -> np.ndarray:
    """(z/2)^a / a! (1 - (z/2)^2/(a+1)) for tiny |z|; Miller's 2k/z overflows there."""
    a = np.arange(top + 1)[:, None]
    h = z[None, :] / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.exp(a * np.log(np.abs(h)) - scipy.special.gammaln(a + 1)) * np.sign(h) ** a
    lead = np.where(h == 0.0, (a == 0).astype(float), lead)
    return lead * (1.0 - h * h / (a + 1))


def bessel_table(z, top: int) -> np.ndarray:
    """J_alpha(z) for alpha = 0..top, shape (top+1,) + shape(z)."""
    if np.ndim(z) == 0 and SERIES_MAX_ARG < abs(float(z)) <= MILLER_MAX_ARG:
        out = np.array(_miller_scalar(abs(float(z)), top))
        if z < 0:
            out[1::2] *= -1.0
        return out
    z = np.asarray(z, dtype=float)
    shape = z.shape
    zf = z.ravel()
    out = np.zeros((top + 1, zf.size))
    az = np.abs(zf)
    zero = az == 0.0
    out[0, zero] = 1.0
    tiny = (~zero) & (az <= SERIES_MAX_ARG)
    if tiny.any():
        out[:, tiny] = _series_small(az[tiny], top)
    small = (az > SERIES_MAX_ARG) & (az <= MILLER_MAX_ARG)
    if small.any():
        out[:, small] = _miller(az[small], top)
    large = az > MILLER_MAX_ARG
    if large.any():
        orders = np.arange(top + 1)[:, None]
        out[:, large] = scipy.special.jv(orders, az[large][None, :])
    neg = zf < 0
    if neg.any():
        odd = (np.arange(top + 1) % 2 == 1)[:, None]
        out[:, neg] = np.where(odd, -out[:, neg], out[:, neg])
    return out.reshape((top + 1,) + shape)


def bessel_j(alpha: int, z):
    """Integer-order Bessel function of the first kind."""
    alpha = int(alpha)
    tab = bessel_table(z, abs(alpha))[abs(alpha)]
    if alpha < 0 and alpha % 2:
        tab = -tab
    return float(tab) if np.ndim(tab) == 0 else tab


def bessel_tail_bound(z: float, cutoff: int) -> float:
    """Bound on sum_{|alpha| > cutoff} |J_alpha(z)|, valid for cutoff + 1 > |z|/2."""
    h = abs(z) / 2.0
    A = int(cutoff) + 1
    if h == 0.0:
        return 0.0
    if h >= A + 1:
        return math.inf
    lead = math.exp(A * math.log(h) - math.lgamma(A + 1))
    return 2.0 * lead / (1.0 - h / (A + 1))


def default_cutoff(*gammas: float) -> int:
    return int(max([40] + [math.ceil(3 * abs(g)) for g in gammas]))


@dataclass(frozen=True)
class BesselSeries:
    """Jacobi-Anger coefficients J_alpha(argument) for |alpha| <= cutoff."""

    argument: float
    cutoff: int
    coefficients: tuple

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def coefficient(self, alpha: int) -> float:
        if abs(alpha) > self.cutoff:
            return 0.0
        return self.coefficients[alpha + self.cutoff]

    def evaluate(self, phase):
        """sum_alpha J_alpha(argument) exp(i alpha phase)."""
        phase = np.asarray(phase, dtype=float)
        c = np.asarray(self.coefficients)
        return np.exp(1j * np.multiply.outer(phase, self.orders)) @ c

    def tail_bound(self) -> float:
        return bessel_tail_bound(self.argument, self.cutoff)

    def certify(self, tol: float) -> bool:
        return self.tail_bound() < tol


def bessel_series(z: float, cutoff: int) -> BesselSeries:
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    pos = bessel_table(z, cutoff)
    sign = np.where(np.arange(cutoff + 1) % 2 == 1, -1.0, 1.0)
    coeffs = np.concatenate([(sign * pos)[:0:-1], pos])
    return BesselSeries(float(z), int(cutoff), tuple(float(c) for c in coeffs))


def jacobi_anger(lambda_sign: int, g2: float, omega_j: float, t, cutoff: int):
    """Partial sum of exp(2 i lambda Theta(t)), Theta = g2 sin(omega_j t)/omega_j."""
    if lambda_sign not in (1, -1):
        raise ValueError("lambda_sign must be +1 or -1")
    if g2 == 0.0:
        return np.ones_like(np.asarray(t, dtype=complex)) if np.ndim(t) else 1.0 + 0j
    series = bessel_series(2.0 * lambda_sign * g2 / omega_j, cutoff)
    out = series.evaluate(omega_j * np.asarray(t, dtype=float))
    return complex(out) if np.ndim(out) == 0 else out
