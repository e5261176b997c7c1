"""Benchmark series: Lorenz63 prediction tasks, uniform inputs, Legendre targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reservoir import SplitLengths


@dataclass(frozen=True)
class LorenzParams:
    a: float = 10.0
    b: float = 28.0
    c: float = 8.0 / 3.0
    dt_integration: float = 0.001
    dt_sample: float = 0.02

    def __post_init__(self) -> None:
        ratio = self.dt_sample / self.dt_integration
        if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_sample must be an integer multiple of dt_integration")

    @property
    def substeps(self) -> int:
        return int(round(self.dt_sample / self.dt_integration))


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "LXX"
    lookahead: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("LXX", "LXZ"):
            raise ValueError(f"unknown task {self.kind!r}")
        if self.lookahead < 0:
            raise ValueError("lookahead must be non-negative")


LORENZ_DISCARD = 1000
LORENZ_INIT = (1.0, 1.0, 1.0)


def integrate_lorenz(params: LorenzParams, init=LORENZ_INIT, n_samples: int = 1,
                     discard: int = LORENZ_DISCARD) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classic RK4 at ``dt_integration``, sampled every ``dt_sample``.

    The first ``discard`` samples are dropped; sample 0 of the result is the
    state ``discard * dt_sample`` after ``init``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    a, b, c = params.a, params.b, params.c
    h = params.dt_integration
    h2 = 0.5 * h
    h6 = h / 6.0
    x, y, z = (float(v) for v in init)
    total = n_samples + discard
    out = np.empty((total, 3))
    sub = params.substeps
    for n in range(total):
        out[n] = x, y, z
        for _ in range(sub):
            k1x = a * (y - x)
            k1y = x * (b - z) - y
            k1z = x * y - c * z
            xa, ya, za = x + h2 * k1x, y + h2 * k1y, z + h2 * k1z
            k2x = a * (ya - xa)
            k2y = xa * (b - za) - ya
            k2z = xa * ya - c * za
            xa, ya, za = x + h2 * k2x, y + h2 * k2y, z + h2 * k2z
            k3x = a * (ya - xa)
            k3y = xa * (b - za) - ya
            k3z = xa * ya - c * za
            xa, ya, za = x + h * k3x, y + h * k3y, z + h * k3z
            k4x = a * (ya - xa)
            k4y = xa * (b - za) - ya
            k4z = xa * ya - c * za
            x += h6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y += h6 * (k1y + 2 * k2y + 2 * k3y + k4y)
            z += h6 * (k1z + 2 * k2z + 2 * k3z + k4z)
    out = out[discard:]
    return out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy()


def rescale_inputs(x: np.ndarray, fit: slice) -> np.ndarray:
    """Affine map sending min/max of ``x[fit]`` to -1/+1; clipped outside."""
    x = np.asarray(x, dtype=float)
    lo, hi = x[fit].min(), x[fit].max()
    if hi <= lo:
        raise ValueError("cannot rescale a constant series")
    return np.clip(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0)


def make_task(series, spec: TaskSpec, splits: SplitLengths | None = None
              ) -> tuple[np.ndarray, np.ndarray]:
    """Inputs ``u_n`` (rescaled ``x_n``) and raw targets for one Lorenz task.

    LXX targets are ``x_{n+p}``; LXZ targets are ``z_n``. Both returned arrays
    have the same length and are aligned by index.
    """
    x, _, z = (np.asarray(s, dtype=float) for s in series)
    p = spec.lookahead if spec.kind == "LXX" else 0
    n = len(x) - p
    if n < 2:
        raise ValueError("series too short for the requested lookahead")
    fit = splits.train_slice if splits is not None else slice(0, n)
    if np.ptp(x[:n][fit]) == 0:
        raise ValueError("degenerate (constant) input series")
    inputs = rescale_inputs(x[:n], fit)
    targets = x[p:p + n] if spec.kind == "LXX" else z[:n]
    return inputs, targets.copy()


def uniform_series(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)


def legendre(k: int, x):
    """Legendre polynomial ``l_k`` by the three-term recurrence."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if k == 0:
        return prev if prev.ndim else float(prev)
    for n in range(1, k):
        prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
    return cur if cur.ndim else float(cur)


def series_to_csv(path, series, dt: float) -> None:
    x, y, z = series
    t = np.arange(len(x)) * dt
    np.savetxt(path, np.column_stack([t, x, y, z]), delimiter=",",
               header="t,x,y,z", comments="", fmt="%.17g")
