"""Krylov-space measures for states and observables.

State side: Lanczos basis, spread complexity, return fidelity, and the
fidelity-thresholded expressivity. Operator side: Liouvillian Lanczos basis,
operator complexity, greedy observability spaces, and the multiplexed
observability measure. Operator work is done in the energy eigenbasis, where
the Liouvillian is diagonal and the trace inner product is unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .quantum import Eigensystem, operator_overlap
from .reservoir import count_state_ops
from .spectral import SIGMA_RTOL, operator_grade

LANCZOS_TOL = 1e-8
MEMBERSHIP_TOL = 1e-8
DEFAULT_THRESHOLD = 1.0 / np.sqrt(2.0)
GRID_CAP = 1e3
N_SEED_STATES = 20
SEED_STATE_SEED = 20250101


def _orthogonalise(w: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # classical Gram-Schmidt, applied twice
    if not basis:
        return w
    q = np.array(basis)
    for _ in range(2):
        w = w - q.T @ (q.conj() @ w)
    return w


def _krylov_basis(apply, v0: np.ndarray, tol: float, max_dim: int) -> list[np.ndarray]:
    v0 = np.asarray(v0, dtype=complex)
    basis = [v0 / np.linalg.norm(v0)]
    while len(basis) < max_dim:
        w = apply(basis[-1])
        scale = np.linalg.norm(w)
        if scale == 0:
            break
        w = _orthogonalise(w, basis)
        r = np.linalg.norm(w)
        if r < tol * scale:
            break
        basis.append(w / r)
    return basis


@dataclass(frozen=True)
class KrylovStateBasis:
    vectors: np.ndarray  # rows are |k_0>, |k_1>, ...

    @property
    def grade(self) -> int:
        return self.vectors.shape[0]


def lanczos_state_basis(eigsys: Eigensystem, psi0: np.ndarray,
                        tol: float = LANCZOS_TOL) -> KrylovStateBasis:
    """Orthonormalised ``{H^k psi0}`` with full reorthogonalisation.

    Stops once the new direction is below ``tol`` relative to ``||H k_n||``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-8:
        raise ValueError("initial state must be normalised")
    v = eigsys.eigenvectors
    c0 = v.conj().T @ psi0
    e = eigsys.eigenvalues
    basis = _krylov_basis(lambda c: e * c, c0, tol, eigsys.dim)
    return KrylovStateBasis(np.array(basis) @ v.T)


def evolve_state(eigsys: Eigensystem, psi0: np.ndarray, t: float) -> np.ndarray:
    v = eigsys.eigenvectors
    return v @ (np.exp(-1j * eigsys.eigenvalues * t) * (v.conj().T @ psi0))


def spread_amplitudes(basis: KrylovStateBasis, eigsys: Eigensystem, psi0: np.ndarray,
                      t: float) -> np.ndarray:
    return basis.vectors.conj() @ evolve_state(eigsys, psi0, t)


def spread_complexity(basis: KrylovStateBasis, eigsys: Eigensystem, psi0: np.ndarray,
                      t: float) -> float:
    p = np.abs(spread_amplitudes(basis, eigsys, psi0, t)) ** 2
    return float(np.dot(np.arange(1, len(p) + 1), p))


def autocorrelation_fidelity(eigsys: Eigensystem, psi0: np.ndarray, t: float) -> float:
    c = eigsys.eigenvectors.conj().T @ np.asarray(psi0, dtype=complex)
    return float(min(1.0, abs(np.sum(np.abs(c) ** 2 * np.exp(-1j * eigsys.eigenvalues * t)))))


@dataclass(frozen=True)
class ExpressivityParams:
    grade: int
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if self.grade < 1:
            raise ValueError("grade must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


def effective_dimension(fidelities: Sequence[float], threshold: float = DEFAULT_THRESHOLD
                        ) -> float:
    """``1 + sum`` of per-step contributions; a step counts fully below ``threshold``
    and fades linearly to zero as the fidelity approaches 1."""
    f = np.asarray(fidelities, dtype=float)
    if threshold >= 1.0:
        return float(1 + len(f))
    contrib = np.where(f < threshold, 1.0, 1.0 - (f - threshold) / (1.0 - threshold))
    return float(1.0 + contrib.sum())


def krylov_expressivity(eigsys: Eigensystem, psi0: np.ndarray, horizon: float,
                        params: ExpressivityParams) -> float:
    """Effective dimension of the states sampled at ``(i+1) T / m``, ``i < m``."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    m = params.grade
    times = (np.arange(m) + 1) * horizon / m
    v = eigsys.eigenvectors
    c0 = v.conj().T @ np.asarray(psi0, dtype=complex)
    states = np.exp(-1j * np.outer(times, eigsys.eigenvalues)) * c0
    fids = np.minimum(1.0, np.abs(np.einsum("ij,ij->i", states[:-1].conj(), states[1:])))
    return effective_dimension(fids, params.threshold)


def seed_states(dim: int, count: int = N_SEED_STATES, seed: int = SEED_STATE_SEED
                ) -> np.ndarray:
    """Fixed list of Haar-random pure states (rows)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def liouvillian_apply(h: np.ndarray, op: np.ndarray) -> np.ndarray:
    h = np.asarray(h)
    op = np.asarray(op)
    if h.shape != op.shape:
        raise ValueError("dimension mismatch")
    return h @ op - op @ h


def _frequency_matrix(eigsys: Eigensystem) -> np.ndarray:
    e = eigsys.eigenvalues
    return e[:, None] - e[None, :]


def evolve_in_eigenbasis(eigsys: Eigensystem, op_eb: np.ndarray, t: float) -> np.ndarray:
    return np.exp(1j * _frequency_matrix(eigsys) * t) * op_eb


@dataclass(frozen=True)
class OperatorKrylovBasis:
    """Orthonormal Liouvillian Krylov basis, stored in the energy eigenbasis."""

    eb_vectors: np.ndarray  # shape (n, dim*dim)
    eigenvectors: np.ndarray

    @property
    def grade(self) -> int:
        return self.eb_vectors.shape[0]

    def operator(self, n: int) -> np.ndarray:
        dim = self.eigenvectors.shape[0]
        v = self.eigenvectors
        return v @ self.eb_vectors[n].reshape(dim, dim) @ v.conj().T


def operator_krylov_basis(eigsys: Eigensystem, op: np.ndarray, tol: float = LANCZOS_TOL
                          ) -> OperatorKrylovBasis:
    """Lanczos on ``{L^k O}`` under the trace inner product.

    Frequencies are snapped to their grouped values and blocks of ``O`` that
    vanish are zeroed first. Without this, round-off sitting on those blocks
    is amplified into spurious directions; with it the iteration stays inside
    the exact invariant subspace, whose dimension caps the basis.
    """
    spec = operator_grade(eigsys, op)
    keep = spec.sigma_norms > SIGMA_RTOL * np.linalg.norm(op)
    op_eb = np.where(keep[spec.element_class], spec.op_eigenbasis, 0.0).ravel()
    omega = spec.omegas[spec.element_class].ravel()
    basis = _krylov_basis(lambda x: omega * x, op_eb, tol, spec.grade)
    return OperatorKrylovBasis(np.array(basis), eigsys.eigenvectors)


def operator_complexity(eigsys: Eigensystem, op: np.ndarray, t: float,
                        basis: OperatorKrylovBasis | None = None) -> float:
    """``sum (n+1) |beta_n|^2`` with ``beta_n`` the overlap of ``O(t)/||O||`` on ``W_n``."""
    if basis is None:
        basis = operator_krylov_basis(eigsys, op)
    op_eb = eigsys.to_eigenbasis(np.asarray(op, dtype=complex))
    ot = evolve_in_eigenbasis(eigsys, op_eb, t).ravel()
    beta = basis.eb_vectors.conj() @ ot / np.linalg.norm(ot)
    p = np.abs(beta) ** 2
    return float(np.dot(np.arange(1, len(p) + 1), p))


@dataclass
class OperatorBasisSet:
    """Orthonormal basis of the joint observability space and its partition.

    ``members[k]`` lists the rows of the basis contributed by observable ``k``.
    """

    eb_basis: np.ndarray  # rows, energy eigenbasis, flattened
    members: list[list[int]]
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eb_basis.shape[0]

    @property
    def dims(self) -> list[int]:
        return [len(m) for m in self.members]

    def operators(self) -> np.ndarray:
        dim = self.eigenvectors.shape[0]
        v = self.eigenvectors
        mats = self.eb_basis.reshape(-1, dim, dim)
        return np.einsum("ij,njk,lk->nil", v, mats, v.conj())


def default_time_grid(eigsys: Eigensystem, observables: Sequence[np.ndarray],
                      cap: float = GRID_CAP, seed: int = 0) -> np.ndarray:
    """``M_max`` sorted random times on ``(0, 2 pi / min-gap]``, horizon capped at ``cap``.

    ``M_max`` is the largest operator grade among ``observables`` and the gap is
    the smallest spacing between distinct transition frequencies. Random times
    avoid the near-aliasing an equally spaced grid suffers at this length.
    """
    grades = [operator_grade(eigsys, o) for o in observables]
    m_max = max(g.grade for g in grades)
    gaps = np.diff(grades[0].omegas)
    horizon = cap if gaps.size == 0 else min(cap, 2 * np.pi / gaps.min())
    times = np.random.default_rng(seed).uniform(0.0, horizon, m_max)
    return np.sort(np.where(times == 0.0, horizon, times))


def build_observability_spaces(eigsys: Eigensystem, observables: Sequence[np.ndarray],
                               time_grid: Sequence[float] | None = None,
                               tol: float = MEMBERSHIP_TOL) -> OperatorBasisSet:
    """Greedy sweep: times outer, observables inner.

    ``O_k(t)`` joins the space when its residual after projection onto the
    current basis exceeds ``tol`` relative to ``||O_k||``.
    """
    if not observables:
        raise ValueError("need at least one observable")
    if time_grid is None:
        time_grid = default_time_grid(eigsys, observables)
    if len(time_grid) == 0:
        raise ValueError("time grid is empty")
    ops_eb = [eigsys.to_eigenbasis(np.asarray(o, dtype=complex)) for o in observables]
    basis: list[np.ndarray] = []
    members: list[list[int]] = [[] for _ in observables]
    for t in time_grid:
        for k, o in enumerate(ops_eb):
            w = evolve_in_eigenbasis(eigsys, o, t).ravel()
            ref = np.linalg.norm(w)
            if ref == 0:
                continue
            w = _orthogonalise(w, basis)
            r = np.linalg.norm(w)
            if r > tol * ref:
                members[k].append(len(basis))
                basis.append(w / r)
    dim = eigsys.dim
    eb = np.array(basis) if basis else np.zeros((0, dim * dim), dtype=complex)
    return OperatorBasisSet(eb, members, eigsys.eigenvectors)


@dataclass(frozen=True)
class ObservabilityResult:
    kappas: tuple[float, ...]
    caps: tuple[int, ...]

    @property
    def total(self) -> float:
        return float(sum(self.kappas))


SPACINGS = ("samples", "grade", "nodes")


def observability_spacing(horizon: float, grade: int, virtual_nodes: int, spacing: str
                          ) -> np.ndarray:
    """Sample times ``j * step`` for ``j = 1..R`` with ``R = min(V, M_k)``.

    ``step`` is ``T / R`` for ``spacing='samples'`` (the R samples spread over
    the clock cycle, like the multiplexed readout), ``T / M_k`` for
    ``'grade'`` and ``T / V`` for ``'nodes'``.
    """
    r = min(virtual_nodes, grade)
    steps = {"samples": r, "grade": grade, "nodes": virtual_nodes}
    if spacing not in steps:
        raise ValueError(f"unknown spacing {spacing!r}")
    return np.arange(1, r + 1) * horizon / steps[spacing]


def krylov_observability(eigsys: Eigensystem, observables: Sequence[np.ndarray],
                         horizon: float, virtual_nodes: int,
                         grades: Sequence[int] | None = None,
                         spacing: str = "samples") -> ObservabilityResult:
    """Per-observable ``1 + sum (1 - overlap)`` over consecutive sampled operators."""
    if horizon <= 0 or virtual_nodes < 1:
        raise ValueError("need horizon > 0 and virtual_nodes >= 1")
    if grades is None:
        grades = [operator_grade(eigsys, o).grade for o in observables]
    kappas, caps = [], []
    for o, m in zip(observables, grades):
        o_eb = eigsys.to_eigenbasis(np.asarray(o, dtype=complex))
        times = observability_spacing(horizon, int(m), virtual_nodes, spacing)
        snaps = [evolve_in_eigenbasis(eigsys, o_eb, t) for t in times]
        loss = sum(1.0 - operator_overlap(a, b) for a, b in zip(snaps[:-1], snaps[1:]))
        kappas.append(1.0 + loss)
        caps.append(len(times))
    return ObservabilityResult(tuple(kappas), tuple(caps))


def count_obs_ops(virtual_nodes: int, n_observables: int, n_inputs: int | None = None
                  ) -> tuple[int, Fraction | None]:
    """Overlap evaluations needed for the observability measure, and their ratio
    to the reservoir state-matrix cost when ``n_inputs`` is given."""
    if virtual_nodes < 1 or n_observables < 1:
        raise ValueError("counts must be positive")
    vk = virtual_nodes * n_observables
    n_obs = vk * (vk + 3) // 2
    if n_inputs is None:
        return n_obs, None
    return n_obs, Fraction(n_obs, count_state_ops(n_observables, n_inputs, virtual_nodes))


@dataclass(frozen=True)
class CurvePoint:
    horizon: float
    virtual_nodes: int
    measure: str
    value: float
    stderr: float = 0.0


CURVE_COLUMNS = ["T", "V", "measure_name", "value", "stderr"]


def write_curves_csv(path, points: Sequence[CurvePoint], comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for p in points:
            w.writerow([repr(float(p.horizon)), p.virtual_nodes, p.measure,
                        repr(float(p.value)), repr(float(p.stderr))])
