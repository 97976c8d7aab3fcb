"""Entrywise-missing completion: depth-1 vs depth-2 models across missing fractions.

    python3 scripts/completion_entrywise.py --fractions 0.5,0.85 --out depth.csv
"""

import argparse
import csv
import sys

import numpy as np

from ptreg.complete import (BlockLayout, complete_matrix, completion_arch, completion_error,
                            random_entry_mask)
from ptreg.train import TrainConfig

from completion_blocks import target


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=7)
    ap.add_argument("--q", type=int, default=4)
    ap.add_argument("--true-rank", type=int, default=5)
    ap.add_argument("--ridge", type=float, default=0.05)
    ap.add_argument("--rank", type=int, default=30)
    ap.add_argument("--depths", default="1,2")
    ap.add_argument("--fractions", default="0.5,0.85")
    ap.add_argument("--mask-seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    M = target(args.p, args.q, args.true_rank, args.seed, args.ridge)
    layout = BlockLayout(args.p, args.q)
    cfg = TrainConfig(epochs=args.epochs, seed=0)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["frac_missing", "depth", "rank", "missing_mse", "observed_mse"])
    for frac in (float(f) for f in args.fractions.split(",")):
        mask = random_entry_mask(layout.n, frac, args.mask_seed)
        M_obs = np.where(mask.observed, M, np.nan)
        for depth in (int(d) for d in args.depths.split(",")):
            M_hat, _, log = complete_matrix(M_obs, layout, completion_arch(args.q, args.rank, depth),
                                            cfg, mask)
            w.writerow([frac, depth, args.rank, repr(completion_error(M, M_hat, mask)),
                        repr(log.final_loss)])
            out.flush()
    if out is not sys.stdout:
        out.close()


if __name__ == "__main__":
    main()
