import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from oracles import joint_snapshot_rank, two_level_operator_complexity, two_level_spread
from qrc_krylov.hamiltonian import (
    PRESET_NAMES,
    RandomCouplingSampler,
    build_ising,
    preset,
    sample_random,
    z_observables,
)
from qrc_krylov.krylov import (
    CurvePoint,
    ExpressivityParams,
    autocorrelation_fidelity,
    build_observability_spaces,
    count_obs_ops,
    effective_dimension,
    krylov_expressivity,
    krylov_observability,
    lanczos_state_basis,
    liouvillian_apply,
    observability_spacing,
    operator_complexity,
    operator_krylov_basis,
    seed_states,
    spread_amplitudes,
    spread_complexity,
    write_curves_csv,
)
from qrc_krylov.quantum import SIGMA_X, SIGMA_Y, SIGMA_Z, haar_random_state, hermitian_eig
from qrc_krylov.spectral import operator_grade, state_grade

PLUS = np.array([1, 1]) / np.sqrt(2)
TWO_LEVEL = hermitian_eig(0.5 * SIGMA_Z)
GRADES = {"HI1": 21, "HI2": 63, "HI3": 99, "HI4": 113}


@pytest.fixture(scope="module")
def hi3():
    return build_ising(preset("HI3"))


def small_instance(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 4))
    h = build_ising(sample_random(n, RandomCouplingSampler(seed)))
    return h, haar_random_state(h.dim, r)


def test_state_basis_examples(presets):
    assert lanczos_state_basis(TWO_LEVEL, PLUS).grade == 2
    h1 = presets["HI1"]
    assert lanczos_state_basis(h1.eigsys, h1.eigsys.eigenvectors[:, 3]).grade == 1
    psi = haar_random_state(16, np.random.default_rng(1))
    basis = lanczos_state_basis(h1.eigsys, psi)
    assert basis.grade == 9
    assert np.allclose(basis.vectors[0], psi)
    assert np.allclose(basis.vectors.conj() @ basis.vectors.T, np.eye(9), atol=1e-10)


@settings(max_examples=50)
@given(st.integers(0, 2**31))
def test_lanczos_grade_matches_state_grade(seed):
    h, psi = small_instance(seed)
    assert lanczos_state_basis(h.eigsys, psi).grade == state_grade(h.eigsys, psi).m


def test_spread_two_level_closed_form():
    basis = lanczos_state_basis(TWO_LEVEL, PLUS)
    for t in np.linspace(0, 10, 23):
        assert spread_complexity(basis, TWO_LEVEL, PLUS, t) == pytest.approx(
            two_level_spread(t), abs=1e-10)


def test_spread_trivial_limits(presets):
    h = presets["HI2"]
    psi = haar_random_state(16, np.random.default_rng(0))
    basis = lanczos_state_basis(h.eigsys, psi)
    assert spread_complexity(basis, h.eigsys, psi, 0.0) == pytest.approx(1.0, abs=1e-12)
    eig = h.eigsys.eigenvectors[:, 0]
    eb = lanczos_state_basis(h.eigsys, eig)
    for t in (0.3, 7.0, 40.0):
        assert spread_complexity(eb, h.eigsys, eig, t) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100)
@given(st.integers(0, 2**31), st.floats(0, 100))
def test_spread_normalisation_and_bounds(seed, t):
    h, psi = small_instance(seed)
    basis = lanczos_state_basis(h.eigsys, psi)
    alpha = spread_amplitudes(basis, h.eigsys, psi, t)
    assert np.sum(np.abs(alpha) ** 2) == pytest.approx(1.0, abs=1e-8)
    ks = spread_complexity(basis, h.eigsys, psi, t)
    assert 1 - 1e-10 <= ks <= basis.grade + 1e-10
    f = autocorrelation_fidelity(h.eigsys, psi, t)
    assert f == pytest.approx(abs(alpha[0]), abs=1e-8)
    assert ks <= f**2 + basis.grade * (1 - f**2) + 1e-8


def test_fidelity_examples(presets):
    assert autocorrelation_fidelity(TWO_LEVEL, PLUS, 0.0) == pytest.approx(1.0)
    assert autocorrelation_fidelity(TWO_LEVEL, PLUS, np.pi) == pytest.approx(0.0, abs=1e-12)
    h = presets["HI4"]
    v = h.eigsys.eigenvectors[:, 7]
    assert autocorrelation_fidelity(h.eigsys, v, 13.3) == pytest.approx(1.0)


def test_effective_dimension_cases():
    lam = 1 / np.sqrt(2)
    assert effective_dimension([0.1, 0.2, 0.5], lam) == 4.0
    assert effective_dimension([1.0, 1.0], lam) == 1.0
    mid = (1 + lam) / 2
    assert effective_dimension([mid], lam) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        ExpressivityParams(0)
    with pytest.raises(ValueError):
        ExpressivityParams(3, threshold=1.5)


def test_expressivity_limits(presets):
    h = presets["HI3"]
    psi = seed_states(16, 1)[0]
    m = state_grade(h.eigsys, psi).m
    assert krylov_expressivity(h.eigsys, psi, 1e-9, ExpressivityParams(m)) == pytest.approx(
        1.0, abs=1e-6)
    with pytest.raises(ValueError):
        krylov_expressivity(h.eigsys, psi, 0.0, ExpressivityParams(m))


def test_expressivity_saturates_for_hi4(presets):
    h = presets["HI4"]
    states = seed_states(16)
    mean = lambda t: np.mean([  # noqa: E731
        krylov_expressivity(h.eigsys, s, t, ExpressivityParams(state_grade(h.eigsys, s).m))
        for s in states])
    values = [mean(t) for t in (1.0, 4.0, 12.0, 20.0, 40.0)]
    assert values[0] < values[1] < values[2]
    assert all(abs(v - 16) <= 1 for v in values[2:])


@given(st.integers(0, 2**31), st.floats(0.01, 50))
def test_expressivity_within_grade(seed, t):
    h, psi = small_instance(seed)
    m = state_grade(h.eigsys, psi).m
    e = krylov_expressivity(h.eigsys, psi, t, ExpressivityParams(m))
    assert 1.0 <= e <= m + 1e-12


def test_seed_states_are_fixed_and_normalised():
    a = seed_states(16)
    assert a.shape == (20, 16)
    assert np.allclose(np.linalg.norm(a, axis=1), 1)
    assert np.array_equal(a, seed_states(16))


def test_liouvillian_examples(presets):
    h = presets["HI2"].matrix
    assert np.allclose(liouvillian_apply(h, h), 0)
    assert np.allclose(liouvillian_apply(0.5 * SIGMA_Z, SIGMA_X), 1j * SIGMA_Y)
    r = np.random.default_rng(0)
    a, b = r.standard_normal((2, 16, 16))
    lhs = liouvillian_apply(h, 2 * a + b)
    assert np.allclose(lhs, 2 * liouvillian_apply(h, a) + liouvillian_apply(h, b), atol=1e-12)
    # Hermitian in, i times Hermitian out
    herm = a + a.T
    out = liouvillian_apply(h, herm)
    assert np.allclose(out, -out.conj().T)


def test_operator_complexity_two_level():
    basis = operator_krylov_basis(TWO_LEVEL, SIGMA_X)
    assert basis.grade == 2
    for t in np.linspace(0, 6, 17):
        assert operator_complexity(TWO_LEVEL, SIGMA_X, t, basis) == pytest.approx(
            two_level_operator_complexity(t), abs=1e-10)


def test_operator_complexity_trivial(presets):
    h = presets["HI1"]
    z = z_observables(4)[0]
    assert operator_complexity(h.eigsys, z, 0.0) == pytest.approx(1.0, abs=1e-12)
    for t in (0.5, 9.0):
        assert operator_complexity(h.eigsys, h.matrix, t) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_operator_basis_grade_matches_theorem(presets, name):
    h = presets[name]
    basis = operator_krylov_basis(h.eigsys, z_observables(4)[0])
    assert basis.grade == GRADES[name]
    g = basis.eb_vectors
    assert np.allclose(g.conj() @ g.T, np.eye(basis.grade), atol=1e-10)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0, 30))
def test_operator_complexity_normalised(seed, t):
    h, _ = small_instance(seed)
    op = z_observables(h.n_sites)[0]
    k = operator_complexity(h.eigsys, op, t)
    assert 1 - 1e-10 <= k <= operator_krylov_basis(h.eigsys, op).grade + 1e-10


def test_observability_space_examples(presets):
    h = presets["HI3"]
    assert build_observability_spaces(h.eigsys, [h.matrix]).dim == 1
    zs = z_observables(4)
    space = build_observability_spaces(h.eigsys, zs, time_grid=[0.0])
    assert space.dim == 4 and space.dims == [1, 1, 1, 1]
    with pytest.raises(ValueError):
        build_observability_spaces(h.eigsys, [])
    with pytest.raises(ValueError):
        build_observability_spaces(h.eigsys, zs, time_grid=[])


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_observability_single_observable_dims(presets, name):
    h = presets[name]
    for z in z_observables(4):
        space = build_observability_spaces(h.eigsys, [z])
        assert space.dims == [GRADES[name]]


@pytest.mark.parametrize("name,union", [("HI1", 62), ("HI2", 94), ("HI3", 114), ("HI4", 116)])
def test_observability_union_matches_joint_rank(presets, name, union):
    h = presets[name]
    zs = z_observables(4)
    space = build_observability_spaces(h.eigsys, zs)
    assert space.dim == union
    assert joint_snapshot_rank(h.matrix, zs, 40) == union


def test_observability_union_is_orthonormal_partition(presets):
    h = presets["HI1"]
    space = build_observability_spaces(h.eigsys, z_observables(4))
    assert space.dim == sum(space.dims)
    g = space.eb_basis
    assert np.allclose(g.conj() @ g.T, np.eye(space.dim), atol=1e-10)
    ops = space.operators()
    assert ops.shape == (space.dim, 16, 16)
    assert np.einsum("ijk,ijk->i", ops.conj(), ops).real == pytest.approx(np.ones(space.dim))


def test_observability_limits(presets):
    h = presets["HI3"]
    zs = z_observables(4)
    res = krylov_observability(h.eigsys, zs, 1e-9, 30)
    assert res.total == pytest.approx(4.0, abs=1e-6)
    res = krylov_observability(h.eigsys, [h.matrix], 25.0, 30)
    assert res.total == pytest.approx(1.0, abs=1e-12)
    assert res.caps == (1,)


@given(st.floats(0.1, 100), st.integers(1, 40))
def test_observability_bounds(t, v):
    h = build_ising(preset("HI2"))
    zs = z_observables(4)
    grades = [63] * 4
    res = krylov_observability(h.eigsys, zs, t, v, grades)
    for kappa, cap in zip(res.kappas, res.caps):
        assert cap == min(v, 63)
        assert 1.0 <= kappa <= cap + 1e-12
    assert 4.0 <= res.total <= sum(res.caps) + 1e-12


def test_observability_spacing():
    assert np.allclose(observability_spacing(10.0, 5, 3, "grade"), [2, 4, 6])
    assert np.allclose(observability_spacing(10.0, 5, 10, "nodes"), [1, 2, 3, 4, 5])
    assert np.allclose(observability_spacing(10.0, 5, 10, "samples"), [2, 4, 6, 8, 10])
    assert np.allclose(observability_spacing(6.0, 99, 3, "samples"), [2, 4, 6])
    with pytest.raises(ValueError):
        observability_spacing(1.0, 2, 2, "other")


def test_kappa_rises_up_to_saturation(hi3):
    z1 = z_observables(4)[0]
    grade = operator_grade(hi3.eigsys, z1).grade
    ts = np.linspace(0.5, 20, 14)
    kappa = [krylov_observability(hi3.eigsys, [z1], t, 30, [grade]).total for t in ts]
    assert spearmanr(ts, kappa).statistic > 0.8


def test_count_obs_ops():
    n, r = count_obs_ops(30, 4, 30000)
    assert n == 7380
    assert r == pytest.approx(7.45e-4, rel=1e-3)
    assert count_obs_ops(1, 1) == (2, None)
    with pytest.raises(ValueError):
        count_obs_ops(0, 1)


def test_curves_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_curves_csv(path, [CurvePoint(2.0, 30, "E_K", 3.5, 0.1)], ["seed: 1"])
    assert path.read_text().splitlines() == ["# seed: 1", "T,V,measure_name,value,stderr",
                                             "2.0,30,E_K,3.5,0.1"]
