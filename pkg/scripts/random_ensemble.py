"""Random-coupling ensemble: mean curves and saturation times per V.

    python scripts/random_ensemble.py --seeds 10 --workers 1
"""

import argparse

from qrc_krylov.analysis import NOT_SATURATED, saturation_detect
from qrc_krylov.experiments import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=6)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--t-max", type=int, default=40)
    ap.add_argument("--t-step", type=int, default=2)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output-dir", default="results/random_ensemble")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        name="random_ensemble", hamiltonian="random", n_sites=args.sites,
        ensemble_seeds=tuple(range(args.seeds)), tasks=("LXX", "LXZ", "measures"),
        T_values=tuple(float(t) for t in range(args.t_step, args.t_max + 1, args.t_step)),
        V_values=(10, 30, 50), output_dir=args.output_dir, workers=args.workers)
    result, paths = run_experiment(cfg)
    for v in cfg.V_values:
        parts = []
        for m in ("O_K", "nrmse_lxx", "nrmse_lxz"):
            t, y = result.curve(m, v)
            t_sat = saturation_detect(t, y)
            parts.append(f"{m} T_sat={'none' if t_sat == NOT_SATURATED else f'{t_sat:g}'}")
        print(f"V={v:3d}  " + "  ".join(parts))
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
