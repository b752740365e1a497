"""Sampled-tree expected belief against its limit for each p_n regime, T = 2..9.

    python scripts/convergence_sweep.py --out results/convergence --trials 100
"""

import argparse
import dataclasses
from pathlib import Path

from botlearn import io
from botlearn.experiment import REGIMES, theory_convergence_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--lambda-a", type=float, default=2.1)
    ap.add_argument("--t-max", type=int, default=9)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    for k, regime in enumerate(sorted(REGIMES)):
        rows = theory_convergence_run(args.lambda_a, regime, range(2, args.t_max + 1), args.trials, seed=args.seed + k)
        if not rows:
            continue
        names = [f.name for f in dataclasses.fields(rows[0])]
        io.write_csv(out / f"{regime}.csv", names, ([getattr(r, f) for f in names] for r in rows))
        print(regime)
        for r in rows:
            print(f"  T={r.horizon:<2} n={r.n:<8} mean={r.mean_value:.4f} limit={r.limit:.4f} error={r.mean_error:.4f}")


if __name__ == "__main__":
    main()
