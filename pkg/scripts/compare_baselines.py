"""Synthetic regression comparison: PTR vs trace regression, OLS and reduced-rank OLS.

Writes one CSV row per (method, rank) with train and test per-entry MSE.

    python3 scripts/compare_baselines.py --n-train 2000 --n-test 500 --out baselines.csv
"""

import argparse
import csv
import sys
import time

from ptreg.baselines import fit_multivariate_ls, fit_reduced_rank, fit_trace_regression, predict
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
    ap.add_argument("--ranks", default="1,5,20")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    true = StackedModel((random_kraus_map(args.p, args.q, args.true_rank, args.seed),))
    train = synth_dataset(SyntheticTask(true, args.sigma, seed=args.seed + 1), args.n_train)
    test = synth_dataset(SyntheticTask(true, 0.0, seed=args.seed + 2), args.n_test)
    cfg = TrainConfig(epochs=args.epochs, learning_rate=args.lr, seed=args.seed + 3)
    ranks = [int(r) for r in args.ranks.split(",")]

    def score(model):
        return (mean_entry_mse(predict(model, train.X), train.Y),
                mean_entry_mse(predict(model, test.X), test.Y))

    rows = []
    for r in ranks:
        t = time.perf_counter()
        model, _ = fit(train, [(args.q, r)], cfg)
        rows.append(("ptr", r, *score(model), time.perf_counter() - t))
        t = time.perf_counter()
        model, _ = fit_trace_regression(train, r, cfg)
        rows.append(("tr", r, *score(model), time.perf_counter() - t))
    t = time.perf_counter()
    rows.append(("mlr", "", *score(fit_multivariate_ls(train)), time.perf_counter() - t))
    for k in ranks:
        if k <= min(args.p, args.q) ** 2:
            t = time.perf_counter()
            rows.append(("rrr", k, *score(fit_reduced_rank(train, k)), time.perf_counter() - t))

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["method", "rank", "train_mse", "test_mse", "seconds"])
    for row in rows:
        w.writerow([row[0], row[1], repr(row[2]), repr(row[3]), f"{row[4]:.2f}"])
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
