"""Closed-form Krylov grades from the spectrum, plus rank oracles that check them.

The state grade counts distinct-energy classes that carry weight in the initial
state. The operator grade counts distinct transition frequencies whose
matrix-element block of the observable is nonzero. The oracles measure the same
dimensions as numerical ranks of time-evolved snapshots, with propagators from
``scipy.linalg.expm``, so they share no code path with ``numpy.linalg.eigh``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .hamiltonian import DEGENERACY_RTOL, group_sorted
from .quantum import Eigensystem, is_hermitian

SIGMA_RTOL = 1e-9
GAMMA_TOL = 1e-9
RANK_RTOL = 1e-8


def eigen_tol(eigsys: Eigensystem) -> float:
    """Eigenvalue grouping tolerance; ``||H||_F`` follows from the spectrum."""
    return DEGENERACY_RTOL * max(1.0, float(np.linalg.norm(eigsys.eigenvalues)))


def _classes(eigsys: Eigensystem, tol: float | None) -> tuple[np.ndarray, np.ndarray, float]:
    if tol is None:
        tol = eigen_tol(eigsys)
    labels, d = group_sorted(eigsys.eigenvalues, tol)
    levels = np.array([eigsys.eigenvalues[labels == p].mean() for p in range(d)])
    return labels, levels, tol


@dataclass(frozen=True)
class StateGrade:
    d: int
    gamma: np.ndarray
    n1: int

    @property
    def m(self) -> int:
        return self.d - self.n1


def state_grade(eigsys: Eigensystem, psi0: np.ndarray, tol: float | None = None,
                gamma_tol: float = GAMMA_TOL) -> StateGrade:
    """Grade of the state Krylov space of ``psi0``.

    ``gamma[p]`` is the norm of the projection of ``psi0`` onto energy class
    ``p``, i.e. its overlap with the normalised projected vector of that class.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-8:
        raise ValueError("initial state must be normalised")
    labels, levels, _ = _classes(eigsys, tol)
    c = eigsys.eigenvectors.conj().T @ psi0
    gamma = np.array([np.linalg.norm(c[labels == p]) for p in range(len(levels))],
                     dtype=complex)
    n1 = int(np.sum(np.abs(gamma) <= gamma_tol))
    return StateGrade(len(levels), gamma, n1)


@dataclass
class TransitionSpectrum:
    """Distinct transition frequencies of ``H`` and the blocks of ``O`` attached to them.

    ``index_sets[P]`` lists the energy-class pairs ``(p, q)`` whose difference
    ``e_p - e_q`` falls in frequency class ``P``. Blocks are held in the energy
    eigenbasis and materialised on demand by :meth:`sigma`.
    """

    omegas: np.ndarray
    index_sets: list[list[tuple[int, int]]]
    sigma_norms: np.ndarray
    d: int
    n_vanishing: int
    op_eigenbasis: np.ndarray = field(repr=False)
    element_class: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n_omega(self) -> int:
        return len(self.omegas)

    @property
    def grade(self) -> int:
        return self.n_omega - self.n_vanishing

    def sigma(self, index: int) -> np.ndarray:
        block = np.where(self.element_class == index, self.op_eigenbasis, 0.0)
        v = self.eigenvectors
        return v @ block @ v.conj().T

    def reconstruct(self, t: float) -> np.ndarray:
        """``O(t) = sum_P exp(i w_P t) sigma_P`` in the computational basis."""
        phases = np.exp(1j * self.omegas * t)[self.element_class]
        v = self.eigenvectors
        return v @ (phases * self.op_eigenbasis) @ v.conj().T


def operator_grade(eigsys: Eigensystem, op: np.ndarray, tol: float | None = None,
                   sigma_rtol: float = SIGMA_RTOL) -> TransitionSpectrum:
    op = np.asarray(op, dtype=complex)
    if op.shape != (eigsys.dim, eigsys.dim):
        raise ValueError("operator and Hamiltonian dimensions differ")
    if not is_hermitian(op):
        raise ValueError("observable must be Hermitian")
    labels, levels, tol = _classes(eigsys, tol)
    d = len(levels)
    diffs = (levels[:, None] - levels[None, :]).ravel()
    # differences of grouped levels can be off by up to 2 tol
    pair_labels, n_omega = group_sorted(diffs, 2.0 * tol)
    omegas = np.array([diffs[pair_labels == k].mean() for k in range(n_omega)])

    index_sets: list[list[tuple[int, int]]] = [[] for _ in range(n_omega)]
    for flat, k in enumerate(pair_labels):
        index_sets[k].append(divmod(flat, d))

    op_eb = eigsys.to_eigenbasis(op)
    class_pairs = pair_labels.reshape(d, d)
    elem_class = class_pairs[labels[:, None], labels[None, :]]
    sq = np.bincount(elem_class.ravel(), weights=np.abs(op_eb.ravel()) ** 2,
                     minlength=n_omega)
    norms = np.sqrt(sq)
    n_vanishing = int(np.sum(norms <= sigma_rtol * np.linalg.norm(op)))
    return TransitionSpectrum(omegas, index_sets, norms, d, n_vanishing, op_eb,
                              elem_class, eigsys.eigenvectors)


def numerical_rank(columns: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.asarray(columns), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _snapshot_times(n: int, t_max: float, seed: int) -> np.ndarray:
    return np.sort(np.random.default_rng(seed).uniform(0.0, t_max, n))


def krylov_rank_oracle_state(h: np.ndarray, psi0: np.ndarray, rtol: float = RANK_RTOL,
                             t_max: float = 200.0, seed: int = 0) -> int:
    """Dimension of ``span{exp(-iHt) psi0}`` over random times, by SVD rank.

    The span of time-evolved copies of ``psi0`` equals its Krylov space, and
    unlike stacked powers ``H^k psi0`` the snapshot matrix stays well
    conditioned when energies nearly coincide.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[0] > 64:
        raise ValueError("oracle is meant for dimension <= 64")
    psi0 = np.asarray(psi0, dtype=complex)
    times = _snapshot_times(2 * h.shape[0], t_max, seed)
    cols = np.column_stack([expm(-1j * h * t) @ psi0 for t in times])
    return numerical_rank(cols, rtol)


def krylov_rank_oracle_operator(h: np.ndarray, op: np.ndarray, rtol: float = RANK_RTOL,
                                t_max: float = 200.0, seed: int = 0) -> int:
    """Dimension of ``span{O(t)}`` over random times, by SVD rank."""
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    if dim > 64:
        raise ValueError("oracle is meant for dimension <= 64")
    op = np.asarray(op, dtype=complex)
    times = _snapshot_times(dim * dim + dim, t_max, seed)
    cols = np.empty((dim * dim, len(times)), dtype=complex)
    for j, t in enumerate(times):
        u = expm(-1j * h * t)
        cols[:, j] = (u.conj().T @ op @ u).ravel()
    return numerical_rank(cols, rtol)


@dataclass(frozen=True)
class SpectralRow:
    hamiltonian: str
    observable: str
    d: int
    n_omega: int
    n_vanishing: int
    grade: int

    @property
    def d_squared(self) -> int:
        return self.d * self.d


SPECTRAL_COLUMNS = ["hamiltonian", "observable", "d", "d2", "N_omega", "N_1", "M"]


def spectral_row(name: str, obs_name: str, eigsys: Eigensystem, op: np.ndarray) -> SpectralRow:
    ts = operator_grade(eigsys, op)
    return SpectralRow(name, obs_name, ts.d, ts.n_omega, ts.n_vanishing, ts.grade)


def write_spectral_csv(path, rows: list[SpectralRow], comments: list[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(SPECTRAL_COLUMNS)
        for r in rows:
            w.writerow([r.hamiltonian, r.observable, r.d, r.d_squared, r.n_omega,
                        r.n_vanishing, r.grade])
