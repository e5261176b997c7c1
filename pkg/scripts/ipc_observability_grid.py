"""IPC and O_K on a (T, V) grid and their Pearson correlation.

    python scripts/ipc_observability_grid.py scripts/configs/ipc_grid_hi2.yaml
"""

import sys
from pathlib import Path

import yaml

from qrc_krylov.analysis import correlation_report
from qrc_krylov.experiments import ExperimentConfig, run_experiment


def main(path: str) -> None:
    cfg = ExperimentConfig.from_dict(yaml.safe_load(Path(path).read_text()))
    if not {"IPC", "measures"} <= set(cfg.tasks):
        sys.exit("config must include both IPC and measures tasks")
    result, paths = run_experiment(cfg)
    ipc, obs = result.grid("ipc_total"), result.grid("O_K")
    print("T \\ V " + " ".join(f"{v:>13}" for v in cfg.V_values))
    for t, row_i, row_o in zip(cfg.T_values, ipc, obs):
        print(f"{t:6g} " + " ".join(f"{a:6.1f}/{b:6.1f}" for a, b in zip(row_i, row_o)))
    print(f"Pearson(IPC, O_K) = {correlation_report(ipc, obs):.3f}")
    for p in paths:
        print(p)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "scripts/configs/ipc_grid_hi2.yaml")
