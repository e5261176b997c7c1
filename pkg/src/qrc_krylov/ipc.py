"""Information processing capacity with Legendre-product targets."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .reservoir import StateMatrix, _with_bias
from .tasks import legendre

# delay window per total order; larger orders use shorter windows
DEFAULT_MAX_DELAY = {1: 15, 2: 15, 3: 10, 4: 7}


@dataclass(frozen=True, order=True)
class IpcTarget:
    """Product of ``l_degree(u_{n - delay})`` over distinct delays."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        delays = [m for m, _ in self.terms]
        if len(set(delays)) != len(delays):
            raise ValueError("delays must be distinct")
        if any(m < 1 or k < 1 for m, k in self.terms):
            raise ValueError("delays and degrees must be >= 1")
        object.__setattr__(self, "terms", tuple(sorted(self.terms, reverse=True)))

    @property
    def total_order(self) -> int:
        return sum(k for _, k in self.terms)

    @property
    def max_delay(self) -> int:
        return max(m for m, _ in self.terms)

    @property
    def delays(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.terms)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(k for _, k in self.terms)


def _delay_window(max_delay: int | Mapping[int, int], order: int) -> int:
    if isinstance(max_delay, Mapping):
        return int(max_delay[order])
    return int(max_delay)


def _targets_of_order(order: int, window: int) -> list[IpcTarget]:
    found = []

    def extend(delay: int, remaining: int, terms: list[tuple[int, int]]) -> None:
        if remaining == 0:
            found.append(IpcTarget(tuple(terms)))
            return
        for m in range(delay, window + 1):
            for k in range(1, remaining + 1):
                extend(m + 1, remaining - k, terms + [(m, k)])

    extend(1, order, [])
    return found


def enumerate_targets(max_order: int, max_delay: int | Mapping[int, int] = DEFAULT_MAX_DELAY
                      ) -> list[IpcTarget]:
    if not 1 <= max_order <= 4:
        raise ValueError("max_order must lie in [1, 4]")
    targets = []
    for order in range(1, max_order + 1):
        window = _delay_window(max_delay, order)
        if window < 1:
            raise ValueError("max_delay must be >= 1")
        targets.extend(_targets_of_order(order, window))
    return targets


def target_series(target: IpcTarget, u: np.ndarray) -> np.ndarray:
    """Target aligned with ``u``; entries without enough history are NaN."""
    u = np.asarray(u, dtype=float)
    if len(u) <= target.max_delay:
        raise ValueError("series shorter than the target delay")
    out = np.full(len(u), np.nan)
    prod = np.ones(len(u) - target.max_delay)
    for m, k in target.terms:
        prod = prod * legendre(k, u[target.max_delay - m: len(u) - m])
    out[target.max_delay:] = prod
    return out


@dataclass
class IpcResult:
    per_order: dict[int, float]
    threshold: float
    max_delay: dict[int, int]
    table: list[tuple[IpcTarget, float]] = field(repr=False, default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(self.per_order.values()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["order", "delays", "degrees", "capacity"])
            for tgt, c in self.table:
                w.writerow([tgt.total_order, " ".join(map(str, tgt.delays)),
                            " ".join(map(str, tgt.degrees)), repr(float(c))])


def default_threshold(readout_dim: int, n_test: int) -> float:
    return 2.0 * readout_dim / n_test


def _squared_correlation(pred: np.ndarray, targ: np.ndarray) -> np.ndarray:
    pc = pred - pred.mean(axis=0)
    tc = targ - targ.mean(axis=0)
    num = np.einsum("ij,ij->j", pc, tc) ** 2
    den = np.einsum("ij,ij->j", pc, pc) * np.einsum("ij,ij->j", tc, tc)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(den > 0, num / den, 0.0)
    return np.clip(c, 0.0, 1.0)


def compute_ipc(s: StateMatrix, u: np.ndarray, max_order: int = 4,
                max_delay: int | Mapping[int, int] = DEFAULT_MAX_DELAY,
                threshold: float | None = None, chunk: int = 256) -> IpcResult:
    """Capacities of every Legendre-product target up to ``max_order``.

    Readouts are fitted on the train block and scored on the test block;
    capacities under ``threshold`` count as zero.
    """
    u = np.asarray(u, dtype=float)
    if max(s.train_index.max(), s.test_index.max()) >= len(u):
        raise ValueError("state matrix rows refer past the end of the input series")
    targets = enumerate_targets(max_order, max_delay)
    if min(s.train_index.min(), s.test_index.min()) < max(t.max_delay for t in targets):
        raise ValueError("not enough input history before the first state-matrix row")
    if threshold is None:
        threshold = default_threshold(s.readout_dim, len(s.test_index))

    # one factorisation of the design serves every target
    q, r = np.linalg.qr(_with_bias(s.train))
    rank_ok = np.abs(np.diag(r)) > 1e-12 * np.abs(np.diag(r)).max()
    x_test = _with_bias(s.test)
    if not rank_ok.all():
        pinv = np.linalg.pinv(_with_bias(s.train))

    caps = np.empty(len(targets))
    for lo in range(0, len(targets), chunk):
        block = targets[lo:lo + chunk]
        series = np.column_stack([target_series(t, u) for t in block])
        y_tr = series[s.train_index]
        y_te = series[s.test_index]
        if rank_ok.all():
            w = np.linalg.solve(r, q.T @ y_tr)
        else:
            w = pinv @ y_tr
        caps[lo:lo + chunk] = _squared_correlation(x_test @ w, y_te)

    caps = np.where(caps < threshold, 0.0, caps)
    per_order = {o: 0.0 for o in range(1, max_order + 1)}
    for t, c in zip(targets, caps):
        per_order[t.total_order] += float(c)
    windows = {o: _delay_window(max_delay, o) for o in range(1, max_order + 1)}
    return IpcResult(per_order, float(threshold), windows, list(zip(targets, caps.tolist())))
