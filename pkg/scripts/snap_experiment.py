"""Strategy comparison on a SNAP edge list (e.g. p2p-Gnutella08.txt), supplied by the user.

    python scripts/snap_experiment.py --snap p2p-Gnutella08.txt --out results/gnutella
"""

import argparse
import json
import tempfile
from pathlib import Path

from botlearn.cli import main as cli_main
from botlearn.config import ExperimentConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snap", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--horizon", type=int, default=101)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategies", nargs="+")
    args = ap.parse_args()

    kw = {"strategies": args.strategies} if args.strategies else {}
    cfg = ExperimentConfig(dataset=args.snap, trials=args.trials, horizon=args.horizon, seed=args.seed, **kw)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "config.json"
        path.write_text(json.dumps(cfg.to_dict()))
        code = cli_main(["experiment", "--config", str(path), "--out", args.out])
        if code == 0:
            code = cli_main(["scatter", "--records", str(Path(args.out) / "records.csv"), "--out", args.out])
    raise SystemExit(code)


if __name__ == "__main__":
    main()
