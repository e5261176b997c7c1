"""Quantum reservoir: input encoding, multiplexed readout, linear training.

Each input ``u`` overwrites qubit 1 with ``sqrt((1-u)/2)|0> + sqrt((1+u)/2)|1>``
and keeps the reduced state of the remaining qubits. The register then evolves
for one clock cycle ``T`` while every observable is read out at the ``V``
sub-times ``(j+1) T / V``. Rows of the state matrix are ordered node-major:
column ``j*K + k`` holds observable ``k`` at sub-time ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import Eigensystem, HermitianOperator, partial_trace_first_qubit, unitary_at

_CHUNK = 4096


@dataclass(frozen=True)
class ReservoirConfig:
    clock_cycle: float
    virtual_nodes: int
    observables: Sequence[np.ndarray]
    noise: float = 1e-5
    n_sites: int | None = None

    def __post_init__(self) -> None:
        if not self.clock_cycle > 0:
            raise ValueError("clock_cycle must be positive")
        if self.virtual_nodes < 1:
            raise ValueError("virtual_nodes must be >= 1")
        if len(self.observables) < 1:
            raise ValueError("at least one observable is required")
        if self.noise < 0:
            raise ValueError("noise amplitude must be non-negative")
        dim = np.asarray(self.observables[0]).shape[0]
        n = int(round(np.log2(dim)))
        if self.n_sites is None:
            object.__setattr__(self, "n_sites", n)
        elif self.n_sites != n:
            raise ValueError("observable dimension does not match n_sites")

    @property
    def n_observables(self) -> int:
        return len(self.observables)

    @property
    def readout_dim(self) -> int:
        return self.virtual_nodes * self.n_observables

    @property
    def sub_times(self) -> np.ndarray:
        v = self.virtual_nodes
        return (np.arange(v) + 1) * self.clock_cycle / v


@dataclass(frozen=True)
class SplitLengths:
    n_init: int = 10_000
    n_train: int = 25_000
    n_test: int = 5_000
    buffer: int = 100

    def __post_init__(self) -> None:
        if min(self.n_init, self.n_train, self.n_test) <= 0 or self.buffer < 0:
            raise ValueError("split lengths must be positive")

    @property
    def total(self) -> int:
        return self.n_init + self.n_train + self.n_test + 2 * self.buffer

    @property
    def train_slice(self) -> slice:
        start = self.n_init + self.buffer
        return slice(start, start + self.n_train)

    @property
    def test_slice(self) -> slice:
        start = self.n_init + 2 * self.buffer + self.n_train
        return slice(start, start + self.n_test)


@dataclass
class StateMatrix:
    """Train and test blocks of the (noisy) state matrix.

    ``train_index``/``test_index`` are the input positions each row belongs to,
    so targets built from the same input series can be aligned with them.
    """

    train: np.ndarray
    test: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def readout_dim(self) -> int:
        return self.train.shape[1]

    def to_csv(self, path, block: str = "both") -> None:
        blocks = {"train": [(self.train_index, self.train)],
                  "test": [(self.test_index, self.test)]}
        blocks["both"] = blocks["train"] + blocks["test"]
        header = "input_index," + ",".join(f"node_{i}" for i in range(self.readout_dim))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for idx, rows in blocks[block]:
                for n, row in zip(idx, rows):
                    fh.write(f"{int(n)}," + ",".join(repr(float(x)) for x in row) + "\n")


@dataclass
class ReadoutWeights:
    """Linear readout; the last row multiplies the constant bias feature."""

    weights: np.ndarray

    @property
    def bias(self) -> np.ndarray:
        return self.weights[-1]

    def predict(self, s: np.ndarray) -> np.ndarray:
        return _with_bias(s) @ self.weights


def _encoded_qubit(u: float) -> np.ndarray:
    a = np.sqrt((1.0 - u) / 2.0)
    b = np.sqrt((1.0 + u) / 2.0)
    psi = np.array([a, b])
    return np.outer(psi, psi).astype(complex)


def _encoded_qubits(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    off = 0.5 * np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    p = np.empty((u.size, 2, 2))
    p[:, 0, 0] = 0.5 * (1.0 - u)
    p[:, 1, 1] = 0.5 * (1.0 + u)
    p[:, 0, 1] = p[:, 1, 0] = off
    return p


def _check_input(u: float) -> None:
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"input {u} outside [-1, 1]; rescale before encoding")


def encode(u: float, rho_prev: np.ndarray, n_sites: int) -> np.ndarray:
    """Overwrite qubit 1 of ``rho_prev`` with the encoded input."""
    _check_input(u)
    return np.kron(_encoded_qubit(u), partial_trace_first_qubit(rho_prev, n_sites))


def maximally_mixed(n_sites: int) -> np.ndarray:
    d = 2**n_sites
    return np.eye(d, dtype=complex) / d


def step(rho_enc: np.ndarray, eigsys: Eigensystem, cfg: ReservoirConfig
         ) -> tuple[np.ndarray, np.ndarray]:
    """Evolve one clock cycle; reference implementation of a single row."""
    row = np.empty(cfg.readout_dim)
    k_obs = cfg.n_observables
    for j, t in enumerate(cfg.sub_times):
        u = unitary_at(eigsys, t)
        rho_t = u @ rho_enc @ u.conj().T
        for k, obs in enumerate(cfg.observables):
            row[j * k_obs + k] = np.real(np.trace(obs @ rho_t))
    u = unitary_at(eigsys, cfg.clock_cycle)
    return u @ rho_enc @ u.conj().T, row


def _readout_functionals(eigsys: Eigensystem, observables: Sequence[np.ndarray],
                         times: np.ndarray, n_sites: int) -> np.ndarray:
    """Real linear maps from a reduced state to expectation values.

    ``<O(t)>`` on ``P (x) r`` equals ``sum_ab P[b, a] Tr(O(t)[a-block, b-block] r)``.
    ``P`` is real symmetric and ``r`` Hermitian, so with ``x = [Re vec(r^T),
    Im vec(r^T)]`` the value is ``P00 x.W0 + P11 x.W1 + P01 x.W2``. Returns
    ``W`` of shape (3, 2*D*D, V*K).
    """
    rest = 2 ** (n_sites - 1)
    cols = []
    for t in times:
        u = unitary_at(eigsys, t)
        for obs in observables:
            o_t = u.conj().T @ np.asarray(obs) @ u
            blocks = o_t.reshape(2, rest, 2, rest).transpose(0, 2, 1, 3).reshape(2, 2, -1)
            combos = np.stack([blocks[0, 0], blocks[1, 1], blocks[0, 1] + blocks[1, 0]])
            cols.append(np.concatenate([combos.real, -combos.imag], axis=1))
    return np.stack(cols, axis=-1)


def _trajectory_chunks(eigsys: Eigensystem, inputs: np.ndarray, clock_cycle: float,
                       n_sites: int, rho0: np.ndarray | None, keep: np.ndarray,
                       chunk: int = _CHUNK):
    """Yield ``(start, states)`` blocks of reduced states at the ``keep`` positions.

    ``start`` is the offset of the block within ``keep``; each state is the
    reduced register seen by that input before encoding.
    """
    rho = maximally_mixed(n_sites) if rho0 is None else np.asarray(rho0, dtype=complex)
    u_t = unitary_at(eigsys, clock_cycle)
    u_dag = u_t.conj().T
    rest = 2 ** (n_sites - 1)
    mask = np.zeros(len(inputs), dtype=bool)
    mask[keep] = True
    last = int(np.max(keep)) if len(keep) else -1
    buf = np.empty((chunk, rest, rest), dtype=complex)
    fill = start = 0
    r = partial_trace_first_qubit(rho, n_sites)
    for i in range(last + 1):
        if mask[i]:
            buf[fill] = r
            fill += 1
            if fill == chunk:
                yield start, buf[:fill].copy()
                start += fill
                fill = 0
        if i == last:
            break
        rho = u_t @ np.kron(_encoded_qubit(inputs[i]), r) @ u_dag
        r = partial_trace_first_qubit(rho, n_sites)
    if fill:
        yield start, buf[:fill].copy()


def reduced_trajectory(eigsys: Eigensystem, inputs: np.ndarray, clock_cycle: float,
                       n_sites: int, rho0: np.ndarray | None = None,
                       keep: np.ndarray | None = None) -> np.ndarray:
    """Reduced states ``Tr_1(rho_n)`` seen by every input before encoding.

    Returns an array of shape (len(keep), D, D) with ``keep`` the sorted input
    indices to retain (default: all).
    """
    keep = np.arange(len(inputs)) if keep is None else np.asarray(keep)
    parts = [s for _, s in _trajectory_chunks(eigsys, np.asarray(inputs, dtype=float),
                                              clock_cycle, n_sites, rho0, keep)]
    rest = 2 ** (n_sites - 1)
    return np.concatenate(parts) if parts else np.empty((0, rest, rest), dtype=complex)


def _rows_from_states(states: np.ndarray, inputs: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = states.shape[0]
    vec = states.transpose(0, 2, 1).reshape(n, -1)
    x = np.concatenate([vec.real, vec.imag], axis=1)
    p = _encoded_qubits(inputs)
    return (p[:, 0, 0, None] * (x @ w[0]) + p[:, 1, 1, None] * (x @ w[1])
            + p[:, 0, 1, None] * (x @ w[2]))


def state_matrices(h: HermitianOperator, inputs: Sequence[float], clock_cycle: float,
                   virtual_nodes: Sequence[int], observable_sets: dict[str, Sequence[np.ndarray]],
                   splits: SplitLengths, noise: float = 1e-5, seed: int = 0,
                   rho0: np.ndarray | None = None) -> dict[tuple[str, int], StateMatrix]:
    """State matrices for every (observable set, ``V``) pair from one trajectory.

    The reservoir state handed from one input to the next depends on neither
    ``V`` nor the observables, so a single simulation serves them all. Noise
    for each matrix is drawn from a fresh generator seeded with ``seed``.
    """
    inputs = np.asarray(inputs, dtype=float)
    if len(inputs) < splits.total:
        raise ValueError(f"input series has {len(inputs)} samples, need {splits.total}")
    if np.any(np.abs(inputs) > 1.0):
        raise ValueError("inputs must lie in [-1, 1]")
    n_sites = h.n_sites
    tr_idx = np.arange(splits.total)[splits.train_slice]
    te_idx = np.arange(splits.total)[splits.test_slice]
    keep = np.concatenate([tr_idx, te_idx])
    keys, funcs = [], []
    for name, obs in observable_sets.items():
        for v in virtual_nodes:
            cfg = ReservoirConfig(clock_cycle, int(v), obs, noise, n_sites)
            keys.append((name, int(v)))
            funcs.append(_readout_functionals(h.eigsys, obs, cfg.sub_times, n_sites))
    rows = [np.empty((len(keep), f.shape[-1])) for f in funcs]
    for start, states in _trajectory_chunks(h.eigsys, inputs, clock_cycle, n_sites, rho0, keep):
        u = inputs[keep[start:start + len(states)]]
        for out, f in zip(rows, funcs):
            out[start:start + len(states)] = _rows_from_states(states, u, f)
    result = {}
    n_tr = len(tr_idx)
    for (name, v), r in zip(keys, rows):
        if noise > 0:
            r = r + noise * np.random.default_rng(seed).standard_normal(r.shape)
        result[(name, v)] = StateMatrix(
            r[:n_tr], r[n_tr:], tr_idx, te_idx,
            meta={"T": clock_cycle, "V": v, "K": len(observable_sets[name]),
                  "observables": name, "noise": noise, "seed": seed})
    return result


def run_multi(h: HermitianOperator, inputs: Sequence[float], clock_cycle: float,
              virtual_nodes: Sequence[int], observables: Sequence[np.ndarray],
              splits: SplitLengths, noise: float = 1e-5, seed: int = 0,
              rho0: np.ndarray | None = None) -> dict[int, StateMatrix]:
    """State matrices for several multiplexing levels sharing one trajectory."""
    mats = state_matrices(h, inputs, clock_cycle, virtual_nodes, {"obs": observables},
                          splits, noise, seed, rho0)
    return {v: m for (_, v), m in mats.items()}


def run(h: HermitianOperator, inputs: Sequence[float], cfg: ReservoirConfig,
        splits: SplitLengths, seed: int = 0, rho0: np.ndarray | None = None) -> StateMatrix:
    return run_multi(h, inputs, cfg.clock_cycle, [cfg.virtual_nodes], cfg.observables,
                     splits, cfg.noise, seed, rho0)[cfg.virtual_nodes]


def _with_bias(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.hstack([s, np.ones((s.shape[0], 1))])


def train_readout(s_train: np.ndarray, targets: np.ndarray) -> ReadoutWeights:
    """Least-squares readout with an appended bias column.

    ``lstsq`` returns the minimum-norm solution when the design is rank deficient.
    """
    s_train = np.asarray(s_train, dtype=float)
    y = np.asarray(targets, dtype=float)
    if s_train.shape[0] != y.shape[0]:
        raise ValueError("state matrix and targets have different row counts")
    w, *_ = np.linalg.lstsq(_with_bias(s_train), y, rcond=None)
    return ReadoutWeights(w)


def nrmse(y: np.ndarray, y_targ: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    y_targ = np.asarray(y_targ, dtype=float)
    if y.shape != y_targ.shape:
        raise ValueError("length mismatch")
    var = np.var(y_targ)
    if var == 0:
        raise ValueError("target has zero variance")
    return float(np.sqrt(np.mean((y - y_targ) ** 2) / var))


def capacity(y: np.ndarray, y_targ: np.ndarray) -> float:
    """Squared Pearson correlation ``cov^2 / (var(y) var(y_targ))``."""
    y = np.asarray(y, dtype=float)
    y_targ = np.asarray(y_targ, dtype=float)
    if y.shape != y_targ.shape:
        raise ValueError("length mismatch")
    yc = y - y.mean()
    tc = y_targ - y_targ.mean()
    vy = np.dot(yc, yc)
    vt = np.dot(tc, tc)
    if vy == 0 or vt == 0:
        raise ValueError("capacity undefined for a constant series")
    return float(min(1.0, np.dot(yc, tc) ** 2 / (vy * vt)))


def count_state_ops(n_observables: int, n_inputs: int, virtual_nodes: int) -> int:
    if min(n_observables, n_inputs, virtual_nodes) < 1:
        raise ValueError("all counts must be positive")
    return (7 + n_observables) * n_inputs * virtual_nodes
