"""Sweep harness: configs, per-grid-point evaluation, deterministic CSV output."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analysis import SMOOTHING_WINDOW, NOT_SATURATED, saturation_detect
from .hamiltonian import (PRESET_NAMES, IsingSpec, RandomCouplingSampler, build_ising, preset,
                          sample_random, z_observables)
from .ipc import compute_ipc
from .krylov import (SPACINGS, ExpressivityParams, autocorrelation_fidelity,
                     build_observability_spaces, krylov_expressivity, krylov_observability,
                     lanczos_state_basis, seed_states, spread_complexity)
from .quantum import HermitianOperator
from .reservoir import SplitLengths, nrmse, state_matrices, train_readout
from .spectral import operator_grade, state_grade
from .tasks import LorenzParams, TaskSpec, integrate_lorenz, make_task, uniform_series

TASKS = ("LXX", "LXZ", "IPC", "measures")
OBSERVABLE_MODES = ("first-site", "all-sites")
DIM_MODES = ("auto", "partition", "theorem")
# greedy partition of the joint operator space is affordable up to this Hilbert dimension
PARTITION_MAX_DIM = 16


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    hamiltonian: str = "HI1"
    n_sites: int = 4
    ensemble_seeds: tuple[int, ...] = tuple(range(10))
    tasks: tuple[str, ...] = ("LXX", "LXZ")
    T_values: tuple[float, ...] = (1.0,)
    V_values: tuple[int, ...] = (30,)
    observables: str | tuple[int, ...] = "all-sites"
    splits: SplitLengths = field(default_factory=SplitLengths)
    noise: float = 1e-5
    noise_seed: int = 0
    input_seed: int = 0
    ipc_max_order: int = 4
    observability_spacing: str = "samples"
    observability_dims: str = "auto"
    n_seed_states: int = 20
    smoothing_window: int = SMOOTHING_WINDOW
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigError("name", "must be a plain, nonempty file stem")
        if self.hamiltonian != "random" and self.hamiltonian.upper() not in PRESET_NAMES:
            raise ConfigError("hamiltonian", f"expected one of {PRESET_NAMES} or 'random'")
        if self.hamiltonian == "random":
            if self.n_sites < 2:
                raise ConfigError("n_sites", "random reservoirs need at least 2 sites")
            if not self.ensemble_seeds:
                raise ConfigError("ensemble_seeds", "must not be empty")
        elif self.n_sites != 4:
            raise ConfigError("n_sites", "presets have 4 sites")
        if not self.tasks or any(t not in TASKS for t in self.tasks):
            raise ConfigError("tasks", f"choose a nonempty subset of {TASKS}")
        if not self.T_values:
            raise ConfigError("T_values", "grid is empty")
        if any(t <= 0 for t in self.T_values):
            raise ConfigError("T_values", "clock cycles must be positive")
        if len(set(self.T_values)) != len(self.T_values):
            raise ConfigError("T_values", "duplicate grid points")
        if not self.V_values:
            raise ConfigError("V_values", "grid is empty")
        if any(int(v) != v or v < 1 for v in self.V_values):
            raise ConfigError("V_values", "virtual nodes must be positive integers")
        if len(set(self.V_values)) != len(self.V_values):
            raise ConfigError("V_values", "duplicate grid points")
        if isinstance(self.observables, str):
            if self.observables not in OBSERVABLE_MODES:
                raise ConfigError("observables", f"expected {OBSERVABLE_MODES} or a site list")
        elif not self.observables or any(not 1 <= s <= self.n_sites for s in self.observables):
            raise ConfigError("observables", f"sites must lie in [1, {self.n_sites}]")
        if self.noise < 0:
            raise ConfigError("noise", "must be non-negative")
        if not 1 <= self.ipc_max_order <= 4:
            raise ConfigError("ipc_max_order", "must lie in [1, 4]")
        if self.observability_spacing not in SPACINGS:
            raise ConfigError("observability_spacing", f"expected one of {SPACINGS}")
        if self.observability_dims not in DIM_MODES:
            raise ConfigError("observability_dims", f"expected one of {DIM_MODES}")
        if self.n_seed_states < 1:
            raise ConfigError("n_seed_states", "must be positive")
        if self.smoothing_window < 3 or self.smoothing_window % 2 == 0:
            raise ConfigError("smoothing_window", "must be odd and >= 3")
        if self.workers < 1:
            raise ConfigError("workers", "must be positive")

    @property
    def sites(self) -> list[int]:
        if self.observables == "first-site":
            return [1]
        if self.observables == "all-sites":
            return list(range(1, self.n_sites + 1))
        return list(self.observables)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["splits"] = asdict(self.splits)
        for key in ("ensemble_seeds", "tasks", "T_values", "V_values"):
            d[key] = list(d[key])
        if not isinstance(self.observables, str):
            d["observables"] = list(self.observables)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config key")
        kw: dict[str, Any] = dict(d)
        if isinstance(kw.get("splits"), dict):
            try:
                kw["splits"] = SplitLengths(**kw["splits"])
            except (TypeError, ValueError) as exc:
                raise ConfigError("splits", str(exc)) from None
        for key, conv in (("ensemble_seeds", int), ("tasks", str), ("T_values", float),
                          ("V_values", int)):
            if key in kw:
                try:
                    kw[key] = tuple(conv(x) for x in kw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(key, str(exc)) from None
        if "observables" in kw and not isinstance(kw["observables"], str):
            try:
                kw["observables"] = tuple(int(x) for x in kw["observables"])
            except (TypeError, ValueError) as exc:
                raise ConfigError("observables", str(exc)) from None
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None

    def config_hash(self) -> str:
        """Hash of everything that affects the data; where and how it runs is excluded."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("output_dir", "workers")}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Reservoir:
    label: str
    spec: IsingSpec

    @property
    def operator(self) -> HermitianOperator:
        return build_ising(self.spec)


def reservoirs(cfg: ExperimentConfig) -> list[Reservoir]:
    if cfg.hamiltonian == "random":
        return [Reservoir(f"random-{s}", sample_random(cfg.n_sites, RandomCouplingSampler(s)))
                for s in cfg.ensemble_seeds]
    name = cfg.hamiltonian.upper()
    return [Reservoir(name, preset(name))]


@lru_cache(maxsize=4)
def lorenz_series(n_samples: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return integrate_lorenz(LorenzParams(), n_samples=n_samples)


def lorenz_tasks(splits: SplitLengths) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Shared rescaled input and the LXX / LXZ targets, aligned by index."""
    lxx = TaskSpec("LXX")
    series = lorenz_series(splits.total + lxx.lookahead)
    u_xx, y_xx = make_task(series, lxx, splits)
    u_xz, y_xz = make_task(series, TaskSpec("LXZ"), splits)
    n = splits.total
    # both tasks feed the same input prefix
    assert np.array_equal(u_xx[:n], u_xz[:n])
    return u_xx[:n], {"LXX": y_xx[:n], "LXZ": y_xz[:n]}


@lru_cache(maxsize=64)
def _observable_dims(spec_json: str, sites: tuple[int, ...], mode: str) -> tuple[int, ...]:
    h = build_ising(IsingSpec.from_dict(json.loads(spec_json)))
    obs = z_observables(h.n_sites, list(sites))
    if mode == "partition" or (mode == "auto" and h.dim <= PARTITION_MAX_DIM):
        return tuple(build_observability_spaces(h.eigsys, obs).dims)
    return tuple(operator_grade(h.eigsys, o).grade for o in obs)


def observable_dims(cfg: "ExperimentConfig", res: "Reservoir") -> tuple[int, ...]:
    """Per-observable dimensions ``M_k`` entering the observability measure.

    With several observables the greedy partition credits each operator only
    with the directions it adds to the joint space; for one observable this is
    its operator grade.
    """
    spec_json = json.dumps(res.spec.to_dict(), sort_keys=True)
    return _observable_dims(spec_json, tuple(cfg.sites), cfg.observability_dims)


def _metric_names(cfg: ExperimentConfig) -> list[str]:
    names = []
    if "LXX" in cfg.tasks:
        names.append("nrmse_lxx")
    if "LXZ" in cfg.tasks:
        names.append("nrmse_lxz")
    if "IPC" in cfg.tasks:
        names += [f"ipc_{o}" for o in range(1, cfg.ipc_max_order + 1)] + ["ipc_total"]
    if "measures" in cfg.tasks:
        names += ["E_K", "O_K", "K_S", "F"]
    return names


def _evaluate(cfg: ExperimentConfig, res: Reservoir, clock_cycle: float
              ) -> list[dict[str, float]]:
    """All metrics at one clock cycle, one record per V (in grid order)."""
    h = res.operator
    obs = z_observables(h.n_sites, cfg.sites)
    out = [dict() for _ in cfg.V_values]
    splits = cfg.splits

    lorenz = [t for t in ("LXX", "LXZ") if t in cfg.tasks]
    if lorenz:
        u, targets = lorenz_tasks(splits)
        mats = state_matrices(h, u, clock_cycle, cfg.V_values, {"obs": obs}, splits,
                              cfg.noise, cfg.noise_seed)
        for rec, v in zip(out, cfg.V_values):
            s = mats[("obs", int(v))]
            for task in lorenz:
                y = targets[task]
                w = train_readout(s.train, y[s.train_index])
                rec[f"nrmse_{task.lower()}"] = nrmse(w.predict(s.test), y[s.test_index])

    if "IPC" in cfg.tasks:
        u = uniform_series(splits.total, cfg.input_seed)
        mats = state_matrices(h, u, clock_cycle, cfg.V_values, {"obs": obs}, splits,
                              cfg.noise, cfg.noise_seed)
        for rec, v in zip(out, cfg.V_values):
            r = compute_ipc(mats[("obs", int(v))], u, max_order=cfg.ipc_max_order)
            for o, c in r.per_order.items():
                rec[f"ipc_{o}"] = c
            rec["ipc_total"] = r.total

    if "measures" in cfg.tasks:
        es = h.eigsys
        states = seed_states(h.dim, cfg.n_seed_states)
        e_k, k_s, fid = [], [], []
        for psi in states:
            m = state_grade(es, psi).m
            e_k.append(krylov_expressivity(es, psi, clock_cycle, ExpressivityParams(m)))
            k_s.append(spread_complexity(lanczos_state_basis(es, psi), es, psi, clock_cycle))
            fid.append(autocorrelation_fidelity(es, psi, clock_cycle))
        grades = observable_dims(cfg, res)
        for rec, v in zip(out, cfg.V_values):
            rec["E_K"] = float(np.mean(e_k))
            rec["O_K"] = krylov_observability(es, obs, clock_cycle, int(v), grades,
                                              cfg.observability_spacing).total
            rec["K_S"] = float(np.mean(k_s))
            rec["F"] = float(np.mean(fid))
    return out


def _evaluate_unit(args) -> list[dict[str, float]]:
    return _evaluate(*args)


@dataclass
class SweepResult:
    """Per-grid-point metrics, one record per (reservoir, T, V).

    ``records`` follow grid enumeration order: reservoir, then T, then V.
    """

    config: ExperimentConfig
    metrics: list[str]
    records: list[dict[str, Any]]

    def labels(self) -> list[str]:
        return list(dict.fromkeys(r["hamiltonian"] for r in self.records))

    def grid(self, metric: str, label: str | None = None) -> np.ndarray:
        """Metric laid out as ``[T index, V index]`` (ensemble mean if ``label`` is None
        and there are several reservoirs)."""
        labels = self.labels() if label is None else [label]
        t_pos = {t: i for i, t in enumerate(self.config.T_values)}
        v_pos = {v: j for j, v in enumerate(self.config.V_values)}
        stack = np.zeros((len(labels), len(t_pos), len(v_pos)))
        for r in self.records:
            if r["hamiltonian"] in labels:
                stack[labels.index(r["hamiltonian"]), t_pos[r["T"]], v_pos[r["V"]]] = r[metric]
        return stack.mean(axis=0)

    def curve(self, metric: str, virtual_nodes: int, label: str | None = None
              ) -> tuple[np.ndarray, np.ndarray]:
        j = list(self.config.V_values).index(virtual_nodes)
        return np.asarray(self.config.T_values), self.grid(metric, label)[:, j]

    def ensemble_rows(self) -> list[dict[str, Any]]:
        labels = self.labels()
        rows = []
        for t in self.config.T_values:
            for v in self.config.V_values:
                pts = [r for r in self.records if r["T"] == t and r["V"] == v]
                row: dict[str, Any] = {"T": t, "V": v, "n_members": len(labels)}
                for m in self.metrics:
                    vals = np.array([p[m] for p in pts])
                    row[f"{m}_mean"] = float(vals.mean())
                    row[f"{m}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
                rows.append(row)
        return rows

    def saturation_table(self) -> list[dict[str, Any]]:
        rows = []
        for label in self.labels():
            for v in self.config.V_values:
                for m in self.metrics:
                    t, y = self.curve(m, v, label)
                    t_sat = (saturation_detect(t, y, window=self.config.smoothing_window)
                             if len(t) >= 5 else NOT_SATURATED)
                    rows.append({"hamiltonian": label, "V": v, "metric": m, "T_sat": t_sat})
        return rows


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    res_list = reservoirs(cfg)
    units = [(cfg, res, float(t)) for res in res_list for t in cfg.T_values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outputs = list(pool.map(_evaluate_unit, units))
    else:
        outputs = [_evaluate_unit(u) for u in units]
    records = []
    for (_, res, t), recs in zip(units, outputs):
        for v, rec in zip(cfg.V_values, recs):
            records.append({"hamiltonian": res.label, "T": t, "V": int(v), **rec})
    return SweepResult(cfg, _metric_names(cfg), records)


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metadata_lines(cfg: ExperimentConfig) -> list[str]:
    seeds = {"noise_seed": cfg.noise_seed, "input_seed": cfg.input_seed}
    if cfg.hamiltonian == "random":
        seeds["ensemble_seeds"] = list(cfg.ensemble_seeds)
    return [
        f"config_hash: {cfg.config_hash()}",
        f"seeds: {json.dumps(seeds, sort_keys=True)}",
        f"version: qrc_krylov {__version__}",
        f"smoothing_window: {cfg.smoothing_window}",
    ]


def write_table(path: Path, rows: Sequence[dict[str, Any]], columns: Sequence[str],
                comments: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format(row[c]) for c in columns) + "\n")


def write_outputs(result: SweepResult) -> list[Path]:
    cfg = result.config
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = metadata_lines(cfg)
    paths = []
    path = out_dir / f"{cfg.name}.csv"
    write_table(path, result.records, ["hamiltonian", "T", "V", *result.metrics], meta)
    paths.append(path)
    if cfg.hamiltonian == "random":
        path = out_dir / f"{cfg.name}_ensemble.csv"
        cols = ["T", "V", "n_members"] + [f"{m}_{s}" for m in result.metrics
                                         for s in ("mean", "std")]
        write_table(path, result.ensemble_rows(), cols, meta)
        paths.append(path)
    if len(cfg.T_values) >= 5:
        path = out_dir / f"{cfg.name}_saturation.csv"
        write_table(path, result.saturation_table(), ["hamiltonian", "V", "metric", "T_sat"],
                    meta)
        paths.append(path)
    return paths


def run_experiment(cfg: ExperimentConfig) -> tuple[SweepResult, list[Path]]:
    result = run_sweep(cfg)
    return result, write_outputs(result)
