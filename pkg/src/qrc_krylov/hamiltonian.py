"""Transverse-field Ising reservoirs.

``H = sum_{i<j} J_ij X_i X_j + h sum_i Z_i`` on ``n_sites`` qubits, with the four
named 4-site presets and a uniform random-coupling ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .quantum import HermitianOperator, pauli_embed

DEGENERACY_RTOL = 1e-9

# (J12, J13, J14, J23, J24, J34)
_PRESET_COUPLINGS = {
    "HI1": (0.50, 0.50, 0.50, 0.50, 0.50, 0.50),
    "HI2": (0.40, 0.50, 0.50, 0.50, 0.50, 0.50),
    "HI3": (0.35, 0.40, 0.45, 0.50, 0.55, 0.60),
    "HI4": (0.35, 0.40, 0.45, 0.50, 0.55, 0.65),
}
PRESET_NAMES = tuple(_PRESET_COUPLINGS)


@dataclass(frozen=True)
class IsingSpec:
    n_sites: int
    h: float
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        for i, j in self.couplings:
            if not 1 <= i < j <= self.n_sites:
                raise ValueError(f"invalid coupling index ({i}, {j})")

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "h": self.h,
            "couplings": [[i, j, float(v)] for (i, j), v in sorted(self.couplings.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IsingSpec":
        couplings = {(int(i), int(j)): float(v) for i, j, v in d.get("couplings", [])}
        return cls(int(d["n_sites"]), float(d["h"]), couplings)


@dataclass(frozen=True)
class RandomCouplingSampler:
    seed: int
    low: float = 0.25
    high: float = 0.75

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError("need low < high")

    def draw(self, index: int) -> float:
        # one independent stream per (seed, coupling index)
        rng = np.random.Generator(np.random.Philox(key=[self.seed, index]))
        return float(rng.uniform(self.low, self.high))


def preset(name: str) -> IsingSpec:
    key = name.upper()
    if key not in _PRESET_COUPLINGS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    pairs = combinations(range(1, 5), 2)
    return IsingSpec(4, 0.5, dict(zip(pairs, _PRESET_COUPLINGS[key])))


def sample_random(n_sites: int, sampler: RandomCouplingSampler, h: float = 0.5) -> IsingSpec:
    if n_sites < 2:
        raise ValueError("random couplings need at least two sites")
    pairs = list(combinations(range(1, n_sites + 1), 2))
    return IsingSpec(n_sites, h, {p: sampler.draw(k) for k, p in enumerate(pairs)})


def build_ising(spec: IsingSpec) -> HermitianOperator:
    n = spec.n_sites
    xs = [pauli_embed(i, "x", n) for i in range(1, n + 1)]
    h = np.zeros((2**n, 2**n), dtype=complex)
    for (i, j), jij in spec.couplings.items():
        h += jij * (xs[i - 1] @ xs[j - 1])
    for i in range(1, n + 1):
        h += spec.h * pauli_embed(i, "z", n)
    return HermitianOperator(h)


def degeneracy_tol(h: HermitianOperator | np.ndarray) -> float:
    m = h.matrix if isinstance(h, HermitianOperator) else np.asarray(h)
    return DEGENERACY_RTOL * max(1.0, float(np.linalg.norm(m)))


def group_sorted(values: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    """Label real ``values`` by gap-splitting the sorted sequence.

    Neighbouring sorted values closer than ``tol`` share a class. Returns the
    class label of every entry (labels ascend with value) and the class count.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return np.zeros(0, dtype=int), 0
    order = np.argsort(values, kind="stable")
    gaps = np.diff(values[order]) > tol
    sorted_labels = np.concatenate([[0], np.cumsum(gaps)])
    labels = np.empty_like(sorted_labels)
    labels[order] = sorted_labels
    return labels, int(sorted_labels[-1]) + 1


def distinct_eigenvalue_count(h: HermitianOperator, tol: float | None = None) -> int:
    if tol is None:
        tol = degeneracy_tol(h)
    return group_sorted(h.eigsys.eigenvalues, tol)[1]


def z_observables(n_sites: int, sites: list[int] | None = None) -> list[np.ndarray]:
    sites = list(range(1, n_sites + 1)) if sites is None else sites
    return [pauli_embed(s, "z", n_sites) for s in sites]
