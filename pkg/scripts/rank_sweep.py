"""Test MSE of PTR as a function of the fitted Kraus rank, plus per-epoch training curves.

    python3 scripts/rank_sweep.py --ranks 1,2,5,10,20 --out ranks.csv --curves curves.csv
"""

import argparse
import csv
import sys

from ptreg.baselines import predict
from ptreg.datagen import SyntheticTask, random_kraus_map, synth_dataset
from ptreg.model import StackedModel
from ptreg.train import TrainConfig, fit, mean_entry_mse


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=20)
    ap.add_argument("--q", type=int, default=10)
    ap.add_argument("--true-rank", type=int, default=5)
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=500)
    ap.add_argument("--sigma", type=float, default=0.0)
    ap.add_argument("--ranks", default="1,2,5,10,20")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out")
    ap.add_argument("--curves", help="CSV of epoch vs training MSE for every rank")
    args = ap.parse_args(argv)

    true = StackedModel((random_kraus_map(args.p, args.q, args.true_rank, args.seed),))
    train = synth_dataset(SyntheticTask(true, args.sigma, seed=args.seed + 1), args.n_train)
    test = synth_dataset(SyntheticTask(true, 0.0, seed=args.seed + 2), args.n_test)
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed + 3)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "train_mse", "test_mse"])
    curves = []
    for r in (int(v) for v in args.ranks.split(",")):
        model, log = fit(train, [(args.q, r)], cfg)
        w.writerow([r, repr(log.final_loss), repr(mean_entry_mse(predict(model, test.X), test.Y))])
        out.flush()
        curves += [(r, k, loss) for k, loss in enumerate(log.losses, start=1)]
    if out is not sys.stdout:
        out.close()
    if args.curves:
        with open(args.curves, "w", newline="") as fh:
            cw = csv.writer(fh, lineterminator="\n")
            cw.writerow(["rank", "epoch", "train_mse"])
            cw.writerows((r, k, repr(v)) for r, k, v in curves)


if __name__ == "__main__":
    main()
