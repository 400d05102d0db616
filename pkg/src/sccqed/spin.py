"""Pauli operators on m sites and sigma_1 eigenbasis labels.

Labels enumerate in binary order with +1 -> bit 0 and site 1 as the most
significant bit, so for m=2 the order is (1,1), (1,-1), (-1,1), (-1,-1).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

__all__ = ["MAX_SITES", "SpinLabel", "PAULI", "pauli_embedded", "walsh_hadamard",
           "lambda_vector", "all_labels", "sigma_sum"]

MAX_SITES = 6

PAULI = {
    1: np.array([[0.0, 1.0], [1.0, 0.0]]),
    2: np.array([[0.0, -1j], [1j, 0.0]]),
    3: np.array([[1.0, 0.0], [0.0, -1.0]]),
}
_W = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def _check_m(m: int):
    if not 1 <= m <= MAX_SITES:
        raise ValueError(f"m must be in 1..{MAX_SITES}, got {m}")


@dataclass(frozen=True)
class SpinLabel:
    lambdas: tuple

    def __post_init__(self):
        lam = tuple(int(v) for v in self.lambdas)
        if not lam or any(v not in (1, -1) for v in lam):
            raise ValueError(f"labels must be a non-empty sequence over +1/-1, got {self.lambdas}")
        _check_m(len(lam))
        object.__setattr__(self, "lambdas", lam)

    @property
    def m(self) -> int:
        return len(self.lambdas)

    @property
    def Lambda(self) -> int:
        return sum(self.lambdas)

    @property
    def index(self) -> int:
        idx = 0
        for v in self.lambdas:
            idx = 2 * idx + (0 if v == 1 else 1)
        return idx

    @classmethod
    def from_index(cls, m: int, index: int) -> "SpinLabel":
        _check_m(m)
        if not 0 <= index < 2 ** m:
            raise ValueError("label index out of range")
        bits = [(index >> (m - 1 - k)) & 1 for k in range(m)]
        return cls(tuple(1 - 2 * b for b in bits))

    def flip(self, j: int) -> "SpinLabel":
        """Flip site j (1-based)."""
        if not 1 <= j <= self.m:
            raise IndexError(f"site {j} out of range 1..{self.m}")
        lam = list(self.lambdas)
        lam[j - 1] = -lam[j - 1]
        return SpinLabel(tuple(lam))

    def __iter__(self):
        return iter(self.lambdas)


def all_labels(m: int) -> list:
    _check_m(m)
    return [SpinLabel.from_index(m, k) for k in range(2 ** m)]


@lru_cache(maxsize=None)
def _pauli_cached(m: int, k: int, j: int) -> np.ndarray:
    mats = [np.eye(2)] * m
    mats[j - 1] = PAULI[k]
    out = reduce(np.kron, mats)
    out.flags.writeable = False
    return out


def pauli_embedded(m: int, k: int, j: int) -> np.ndarray:
    """sigma_k acting on site j (1-based) of m qubits."""
    _check_m(m)
    if k not in PAULI:
        raise ValueError(f"axis must be 1, 2 or 3, got {k}")
    if not 1 <= j <= m:
        raise IndexError(f"site {j} out of range 1..{m}")
    return _pauli_cached(m, k, j)


def sigma_sum(m: int, k: int) -> np.ndarray:
    return sum(pauli_embedded(m, k, j) for j in range(1, m + 1))


def walsh_hadamard(m: int) -> np.ndarray:
    _check_m(m)
    return reduce(np.kron, [_W] * m)


def lambda_vector(label: SpinLabel) -> np.ndarray:
    """|lambda> = tensor product of (1, lambda_j)/sqrt2."""
    return reduce(np.kron, [np.array([1.0, float(v)]) / np.sqrt(2.0) for v in label])
