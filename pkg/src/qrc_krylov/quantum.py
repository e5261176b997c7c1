"""Dense linear algebra on small qubit registers.

Everything here works on plain ``numpy`` arrays. Operators are square complex
matrices of dimension ``2**n_sites``; qubit 1 is the leftmost tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

HERMITIAN_TOL = 1e-10


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def pauli_embed(site: int, axis: str, n_sites: int) -> np.ndarray:
    """Pauli matrix ``axis`` acting on qubit ``site`` (1-based) of ``n_sites``."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside [1, {n_sites}]")
    try:
        sigma = _PAULI[axis.lower()]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_sites - site), dtype=complex)
    return np.kron(np.kron(left, sigma), right)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))))
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)


@dataclass(frozen=True)
class Eigensystem:
    """Eigendecomposition ``H = V diag(eigenvalues) V^dagger`` of a Hermitian matrix.

    Eigenvalues are ascending; column ``j`` of ``eigenvectors`` is the eigenvector
    for ``eigenvalues[j]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def unitary(self, t: float) -> np.ndarray:
        return unitary_at(self, t)

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        """Matrix elements ``<phi_m| op |phi_n>``."""
        v = self.eigenvectors
        return v.conj().T @ op @ v

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ op @ v.conj().T


def hermitian_eig(h: np.ndarray) -> Eigensystem:
    h = np.asarray(h)
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian")
    # symmetrise away round-off before handing to LAPACK
    h = 0.5 * (h + h.conj().T)
    evals, evecs = np.linalg.eigh(h)
    return Eigensystem(evals, evecs.astype(complex))


def unitary_at(eigsys: Eigensystem, t: float) -> np.ndarray:
    """``exp(-i H t)`` from the spectral decomposition."""
    v = eigsys.eigenvectors
    phases = np.exp(-1j * eigsys.eigenvalues * t)
    return (v * phases) @ v.conj().T


def evolve_operator(eigsys: Eigensystem, op: np.ndarray, t: float) -> np.ndarray:
    """Heisenberg picture ``exp(iHt) op exp(-iHt)``."""
    u = unitary_at(eigsys, t)
    return u.conj().T @ op @ u


@dataclass
class HermitianOperator:
    """Hermitian matrix with a lazily computed, cached eigensystem.

    The cache is filled once; sweep loops should pass ``op.eigsys`` around
    rather than rediagonalising.
    """

    matrix: np.ndarray
    _eigsys: Eigensystem | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if not is_hermitian(self.matrix):
            raise ValueError("matrix is not Hermitian")
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return int(round(np.log2(self.dim)))

    @property
    def eigsys(self) -> Eigensystem:
        if self._eigsys is None:
            self._eigsys = hermitian_eig(self.matrix)
        return self._eigsys

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


def partial_trace_first_qubit(rho: np.ndarray, n_sites: int) -> np.ndarray:
    """Trace out qubit 1 (the leftmost factor)."""
    if n_sites < 2:
        raise ValueError("need at least two qubits to trace one out")
    rest = 2 ** (n_sites - 1)
    r = np.asarray(rho).reshape(2, rest, 2, rest)
    return r[0, :, 0, :] + r[1, :, 1, :]


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalise the zero vector")
    return psi / n


def fidelity_pure(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|`` for normalised state vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("state dimensions differ")
    return float(min(1.0, abs(np.vdot(a, b))))


def operator_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Normalised trace overlap ``|Tr(A^dagger B)| / (||A||_F ||B||_F)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("operator dimensions differ")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("operator overlap undefined for a zero operator")
    return float(min(1.0, abs(np.vdot(a, b)) / (na * nb)))


def haar_random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def basis_state(index: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -tol)
