import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from oracles import ising_by_bits
from qrc_krylov.hamiltonian import (
    PRESET_NAMES,
    IsingSpec,
    RandomCouplingSampler,
    build_ising,
    preset,
    sample_random,
    z_observables,
)
from qrc_krylov.quantum import HermitianOperator, haar_random_state, hermitian_eig
from qrc_krylov.spectral import (
    krylov_rank_oracle_operator,
    krylov_rank_oracle_state,
    operator_grade,
    spectral_row,
    state_grade,
    write_spectral_csv,
)

# (N_omega, N_1, M), identical for every Z_i of a preset; M cross-checked by
# the snapshot-rank oracle and N_omega by distinct_frequencies below
OPERATOR_TABLE = {
    "HI1": (63, 42, 21),
    "HI2": (233, 170, 63),
    "HI3": (211, 112, 99),
    "HI4": (241, 128, 113),
}
DISTINCT = {"HI1": 9, "HI2": 16, "HI3": 15, "HI4": 16}


def distinct_frequencies(matrix, tol=1e-7):
    ev = eigh(matrix, eigvals_only=True)
    levels = [ev[0]]
    for e in ev[1:]:
        if e - levels[-1] > tol:
            levels.append(e)
    diffs = sorted(a - b for a in levels for b in levels)
    return 1 + sum(1 for a, b in zip(diffs, diffs[1:]) if b - a > 2 * tol)


def random_instance(seed):
    """Small Ising chain; half the instances share one coupling value."""
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 4))
    spec = sample_random(n, RandomCouplingSampler(seed))
    if seed % 2:
        spec = IsingSpec(n, 0.5, {p: 0.5 for p in spec.couplings})
    return build_ising(spec)


def engineered_state(h, seed):
    """Haar state with some energy classes removed, so n_1 > 0 often."""
    r = np.random.default_rng(seed)
    psi = haar_random_state(h.dim, r)
    es = h.eigsys
    c = es.eigenvectors.conj().T @ psi
    drop = r.random(h.dim) < 0.3
    levels = np.round(es.eigenvalues, 8)
    for lv in np.unique(levels[drop]):
        c[levels == lv] = 0
    if not np.any(c):
        c[0] = 1
    psi = es.eigenvectors @ c
    return psi / np.linalg.norm(psi)


def random_hermitian(r, dim):
    a = r.standard_normal((dim, dim)) + 1j * r.standard_normal((dim, dim))
    return a + a.conj().T


def test_state_grade_examples():
    es = hermitian_eig(np.diag([1.0, 1.0, 2.0]))
    g = state_grade(es, np.array([1.0, -1.0, 0.0]) / np.sqrt(2))
    assert (g.d, g.n1, g.m) == (2, 1, 1)
    h1 = build_ising(preset("HI1"))
    g = state_grade(h1.eigsys, haar_random_state(16, np.random.default_rng(3)))
    assert (g.d, g.n1, g.m) == (9, 0, 9)
    g = state_grade(h1.eigsys, h1.eigsys.eigenvectors[:, 4])
    assert g.m == 1
    with pytest.raises(ValueError):
        state_grade(h1.eigsys, np.ones(16))


def test_operator_grade_trivial_examples():
    h = build_ising(preset("HI3"))
    assert operator_grade(h.eigsys, np.eye(16)).grade == 1
    assert operator_grade(h.eigsys, h.matrix).grade == 1
    with pytest.raises(ValueError):
        operator_grade(h.eigsys, np.triu(np.ones((16, 16))))
    with pytest.raises(ValueError):
        operator_grade(h.eigsys, np.eye(4))


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_preset_operator_grades(name):
    h = build_ising(preset(name))
    assert distinct_frequencies(h.matrix.real) == OPERATOR_TABLE[name][0]
    for site, z in enumerate(z_observables(4), start=1):
        row = spectral_row(name, f"Z{site}", h.eigsys, z)
        assert row.d == DISTINCT[name]
        assert (row.n_omega, row.n_vanishing, row.grade) == OPERATOR_TABLE[name]
        assert krylov_rank_oracle_operator(h.matrix, z) == row.grade


@settings(max_examples=25)
@given(st.integers(0, 2**31))
def test_state_grade_matches_rank_oracle(seed):
    h = random_instance(seed)
    psi = engineered_state(h, seed)
    assert state_grade(h.eigsys, psi).m == krylov_rank_oracle_state(h.matrix, psi)


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.sampled_from(["random", "z", "diagonal"]))
def test_operator_grade_matches_rank_oracle(seed, kind):
    h = random_instance(seed)
    r = np.random.default_rng(seed)
    if kind == "random":
        op = random_hermitian(r, h.dim)
    elif kind == "z":
        op = z_observables(h.n_sites)[int(r.integers(h.n_sites))]
    else:
        # diagonal in the energy basis: only the zero frequency survives
        v = h.eigsys.eigenvectors
        op = v @ np.diag(r.standard_normal(h.dim)) @ v.conj().T
    spec = operator_grade(h.eigsys, op)
    assert spec.grade == krylov_rank_oracle_operator(h.matrix, op)
    if kind == "diagonal":
        assert spec.grade == 1


def test_generic_spectrum_has_full_state_grade():
    r = np.random.default_rng(0)
    h = random_hermitian(r, 8)
    psi = haar_random_state(8, r)
    assert krylov_rank_oracle_state(h, psi) == 8
    es = hermitian_eig(h)
    assert state_grade(es, psi).m == 8
    assert krylov_rank_oracle_state(h, es.eigenvectors[:, 0]) == 1


@given(st.integers(0, 2**31), st.floats(-100, 100))
def test_sigma_decomposition_reconstructs_evolution(seed, t):
    h = random_instance(seed)
    op = random_hermitian(np.random.default_rng(seed), h.dim)
    spec = operator_grade(h.eigsys, op)
    u = h.eigsys.eigenvectors @ np.diag(np.exp(-1j * h.eigsys.eigenvalues * t)) \
        @ h.eigsys.eigenvectors.conj().T
    assert np.linalg.norm(spec.reconstruct(t) - u.conj().T @ op @ u) <= 1e-8


@given(st.integers(0, 2**31))
def test_frequency_count_chain(seed):
    h = random_instance(seed)
    op = random_hermitian(np.random.default_rng(seed), h.dim)
    spec = operator_grade(h.eigsys, op)
    d = spec.d
    assert sum(len(j) for j in spec.index_sets) == d * d
    assert 1 <= spec.grade <= spec.n_omega <= 2 * (d * (d - 1) // 2) + 1
    total = sum(spec.sigma(k) for k in range(spec.n_omega))
    assert np.allclose(total, op, atol=1e-10)


def test_sigma_blocks_of_vanishing_classes_are_zero():
    h = build_ising(preset("HI1"))
    spec = operator_grade(h.eigsys, z_observables(4)[0])
    zero = np.flatnonzero(spec.sigma_norms <= 1e-9 * 4)
    assert len(zero) == spec.n_vanishing
    assert np.linalg.norm(spec.sigma(int(zero[0]))) <= 1e-8


def test_builder_matches_independent_matrix():
    spec = preset("HI2")
    ref = HermitianOperator(ising_by_bits(4, spec.h, spec.couplings))
    z1 = z_observables(4)[0]
    assert operator_grade(ref.eigsys, z1).grade == operator_grade(build_ising(spec).eigsys,
                                                                  z1).grade


def test_spectral_csv(tmp_path):
    h = build_ising(preset("HI1"))
    rows = [spectral_row("HI1", "Z1", h.eigsys, z_observables(4)[0])]
    path = tmp_path / "spectral.csv"
    write_spectral_csv(path, rows, ["note"])
    lines = path.read_text().splitlines()
    assert lines == ["# note", "hamiltonian,observable,d,d2,N_omega,N_1,M",
                     "HI1,Z1,9,81,63,42,21"]
