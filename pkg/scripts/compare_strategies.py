"""Strategy comparison on a synthetic DCM graph: records, trajectories and the p~ / belief scatter.

    python scripts/compare_strategies.py --out results/compare --n 10000 --trials 5
"""

import argparse
from pathlib import Path

import numpy as np

from botlearn import io
from botlearn.config import ExperimentConfig, SyntheticSpec
from botlearn.experiment import run_experiment, scatter_ptilde_vs_belief


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--lambda-a", type=float, default=2.1)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--horizon", type=int, default=101)
    ap.add_argument("--budget-fraction", type=float, default=1 / 400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ExperimentConfig(
        synthetic=SyntheticSpec(n=args.n, lambda_a=args.lambda_a),
        trials=args.trials, horizon=args.horizon, budget_fraction=args.budget_fraction, seed=args.seed,
    )
    records = run_experiment(cfg)
    out = Path(args.out)
    io.write_records(out / "records.csv", records)
    io.write_record_trajectories(out / "trajectories.csv", records)
    io.write_json(out / "config.json", cfg.to_dict())

    print(f"{'strategy':<12} {'mean p~':>10} {'mean belief(i*)':>16} {'mean belief':>12}")
    for name in sorted({r.strategy for r in records}):
        rs = [r for r in records if r.strategy == name]
        print(
            f"{name:<12} {np.mean([r.ptilde for r in rs]):>10.5f} "
            f"{np.mean([r.belief_i_star for r in rs]):>16.4f} {np.mean([r.final_mean_belief for r in rs]):>12.4f}"
        )
    for field in ("belief_i_star", "final_mean_belief"):
        print(f"pearson r (p~ vs {field}): {scatter_ptilde_vs_belief(records, field).pearson_r}")


if __name__ == "__main__":
    main()
