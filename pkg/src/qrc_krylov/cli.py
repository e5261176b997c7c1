"""Command-line entry point: ``qrc-krylov <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .experiments import DIM_MODES, ConfigError, ExperimentConfig, run_experiment
from .hamiltonian import PRESET_NAMES, build_ising, preset, z_observables
from .krylov import SPACINGS, count_obs_ops
from .reservoir import count_state_ops
from .spectral import spectral_row, write_spectral_csv

SUBCOMMAND_TASKS = {
    "measures": ("measures",),
    "lorenz": ("LXX", "LXZ"),
    "ipc": ("IPC",),
}


def parse_grid(text: str, conv=float) -> tuple:
    """``"1,2,5"`` or an inclusive range ``"start:stop:step"``."""
    items = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            start, stop, step = (float(x) for x in part.split(":"))
            if step <= 0:
                raise ValueError("range step must be positive")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            items.extend(conv(round(start + k * step, 12)) for k in range(n))
        elif part:
            items.append(conv(part))
    return tuple(items)


def _observables_arg(text: str):
    if text in ("first-site", "all-sites"):
        return text
    return tuple(int(x) for x in text.split(","))


def _splits_arg(text: str) -> dict:
    n_init, n_train, n_test, buffer = (int(x) for x in text.split(","))
    return {"n_init": n_init, "n_train": n_train, "n_test": n_test, "buffer": buffer}


def _add_sweep_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file with ExperimentConfig fields")
    p.add_argument("--name")
    p.add_argument("--hamiltonian", help=f"one of {', '.join(PRESET_NAMES)} or 'random'")
    p.add_argument("--n-sites", type=int)
    p.add_argument("--seeds", help="ensemble seeds, e.g. 0:9:1")
    p.add_argument("--tasks", help="comma list from LXX, LXZ, IPC, measures")
    p.add_argument("--T", dest="T_values", help="clock cycles, e.g. 1:40:1 or 2,5,10")
    p.add_argument("--V", dest="V_values", help="virtual nodes, e.g. 10,30,50")
    p.add_argument("--observables", help="first-site, all-sites, or a site list like 1,3")
    p.add_argument("--splits", help="n_init,n_train,n_test,buffer")
    p.add_argument("--noise", type=float)
    p.add_argument("--noise-seed", type=int)
    p.add_argument("--input-seed", type=int)
    p.add_argument("--ipc-max-order", type=int)
    p.add_argument("--observability-spacing", choices=SPACINGS)
    p.add_argument("--observability-dims", choices=DIM_MODES)
    p.add_argument("--n-seed-states", type=int)
    p.add_argument("--smoothing-window", type=int)
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)


_CONVERTERS = {
    "seeds": ("ensemble_seeds", lambda s: parse_grid(s, int)),
    "tasks": ("tasks", lambda s: tuple(x.strip() for x in s.split(","))),
    "T_values": ("T_values", parse_grid),
    "V_values": ("V_values", lambda s: parse_grid(s, int)),
    "observables": ("observables", _observables_arg),
    "splits": ("splits", _splits_arg),
}


def build_config(args: argparse.Namespace, defaults: dict | None = None) -> ExperimentConfig:
    """Defaults, then the YAML file, then command-line flags (last wins)."""
    values: dict = dict(defaults or {})
    if args.config is not None:
        try:
            loaded = yaml.safe_load(args.config.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level must be a mapping")
        values.update(loaded)
    skip = {"command", "config", "func"}
    for key, raw in vars(args).items():
        if key in skip or raw is None:
            continue
        target, conv = _CONVERTERS.get(key, (key, None))
        try:
            values[target] = conv(raw) if conv else raw
        except ValueError as exc:
            raise ConfigError(target, str(exc)) from None
    return ExperimentConfig.from_dict(values)


def _cmd_sweep(args, defaults: dict) -> int:
    cfg = build_config(args, defaults)
    _, paths = run_experiment(cfg)
    for p in paths:
        print(p)
    return 0


def _cmd_spectral(args) -> int:
    names = [n.strip().upper() for n in args.hamiltonians.split(",")]
    for n in names:
        if n not in PRESET_NAMES:
            raise ConfigError("hamiltonians", f"unknown preset {n!r}")
    rows = []
    for n in names:
        h = build_ising(preset(n))
        for site, op in enumerate(z_observables(4), start=1):
            rows.append(spectral_row(n, f"Z{site}", h.eigsys, op))
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "spectral.csv"
    write_spectral_csv(path, rows, [f"version: qrc_krylov {__version__}"])
    print(f"{'H':5} {'O':3} {'d':>3} {'d2':>4} {'N_w':>4} {'N_1':>4} {'M':>4}")
    for r in rows:
        print(f"{r.hamiltonian:5} {r.observable:3} {r.d:3d} {r.d_squared:4d} {r.n_omega:4d} "
              f"{r.n_vanishing:4d} {r.grade:4d}")
    print(path)
    return 0


def _cmd_ops_count(args) -> int:
    if min(args.K, args.V, args.n_inputs) < 1:
        raise ConfigError("K/V/n-inputs", "must be positive")
    n_state = count_state_ops(args.K, args.n_inputs, args.V)
    n_obs, ratio = count_obs_ops(args.V, args.K, args.n_inputs)
    print(f"N_state = (7 + K) * N_u * V = {n_state}")
    print(f"N_obs   = VK(VK + 3) / 2   = {n_obs}")
    print(f"r       = N_obs / N_state  = {ratio} = {float(ratio):.3g}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrc-krylov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectral", help="distinct eigenvalues, frequencies and grades")
    p.add_argument("--hamiltonians", default=",".join(PRESET_NAMES))
    p.add_argument("--output-dir", default="results")

    for name, helptext in (("measures", "fidelity, spread, expressivity, observability curves"),
                           ("lorenz", "Lorenz prediction sweeps"),
                           ("ipc", "information processing capacity sweeps"),
                           ("sweep", "combined grid with tasks from config/flags"),
                           ("random-ensemble", "random-coupling ensemble sweep")):
        p = sub.add_parser(name, help=helptext)
        _add_sweep_options(p)

    p = sub.add_parser("ops-count", help="operation counts of reservoir vs observability")
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--V", type=int, default=30)
    p.add_argument("--n-inputs", type=int, default=30000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "spectral":
            return _cmd_spectral(args)
        if args.command == "ops-count":
            return _cmd_ops_count(args)
        defaults: dict = {"name": args.command.replace("-", "_")}
        if args.command in SUBCOMMAND_TASKS:
            defaults["tasks"] = SUBCOMMAND_TASKS[args.command]
        if args.command == "random-ensemble":
            defaults.update(hamiltonian="random", n_sites=6, V_values=(10, 30, 50),
                            tasks=("LXX", "measures"))
        return _cmd_sweep(args, defaults)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
