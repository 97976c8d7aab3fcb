"""``ptreg`` command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 numeric failure (for
example converting a Choi matrix that is not PSD).
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import baselines, bounds, complete, cpmap, datagen, formats, train
from .model import DEFAULT_EPS, StackedModel


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _default_seed() -> int:
    raw = os.environ.get("PTR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PTR_SEED must be an integer, got {raw!r}") from None


def parse_arch(text: str):
    """``"q1:r1,q2:r2"`` -> ``[(q1, r1), (q2, r2)]``."""
    try:
        arch = [tuple(int(v) for v in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --arch {text!r}; expected q1:r1[,q2:r2...]") from None
    if not arch or any(len(a) != 2 for a in arch):
        raise UsageError(f"bad --arch {text!r}; expected q1:r1[,q2:r2...]")
    return arch


def parse_int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _train_config(args) -> train.TrainConfig:
    return train.TrainConfig(optimizer=args.optimizer, learning_rate=args.lr, epochs=args.epochs,
                             batch_size=args.batch, seed=args.seed,
                             activation_eps=getattr(args, "eps", DEFAULT_EPS))


def _add_train_flags(sp, epochs=100):
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--epochs", type=int, default=epochs)
    sp.add_argument("--batch", type=int, default=16)
    sp.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    sp.add_argument("--seed", type=int, default=None)


def _load_model(path) -> StackedModel:
    return formats.parse_model(formats.read_text(path))


def _load_dataset(path) -> train.Dataset:
    return formats.parse_dataset(formats.read_text(path))


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args):
    map_seed = args.seed if args.map_seed is None else args.map_seed
    true = StackedModel((datagen.random_kraus_map(args.p, args.q, args.rank, map_seed),))
    cross = None
    if args.general:
        cross = datagen.random_kraus_map(args.p, args.q, args.rank, map_seed + 1)
    task = datagen.SyntheticTask(true, args.sigma, args.seed, args.input_law, cross)
    formats.write_text(args.out, formats.render_dataset(datagen.synth_dataset(task, args.n)))
    if args.true_model:
        formats.write_text(args.true_model, formats.render_model(true))
    return 0


def cmd_fit(args):
    data = _load_dataset(args.data)
    arch = parse_arch(args.arch)
    model, log = train.fit(data, arch, _train_config(args))
    formats.write_text(args.out, formats.render_model(model))
    if args.log:
        with open(args.log, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_mse"])
            for k, loss in enumerate(log.losses, start=1):
                w.writerow([k, formats.render_float(loss)])
    print(f"final_train_mse {formats.render_float(log.final_loss)}")
    return 0


def cmd_predict(args):
    model = _load_model(args.model)
    data = _load_dataset(args.data)
    pred = train.Dataset(data.X, baselines.predict(model, data.X))
    formats.write_text(args.out, formats.render_dataset(pred))
    return 0


def cmd_eval(args):
    model = _load_model(args.model)
    data = _load_dataset(args.data)
    print(formats.render_float(train.dataset_mse(model, data)))
    return 0


def cmd_complete(args):
    M_obs = formats.parse_matrix(formats.read_text(args.matrix))
    mask = complete.ObservationMask.from_nan(M_obs)
    cfg = _train_config(args)
    if args.grid:
        n = M_obs.shape[0]
        layouts = complete.divisor_layouts(n)
        if args.p is not None or args.q is not None:
            layouts = [L for L in layouts
                       if (args.p is None or L.p == args.p) and (args.q is None or L.q == args.q)]
        ranks = parse_int_list(args.ranks)
        candidates = [(L, r) for L in layouts for r in ranks]
        layout, rank, rows = complete.grid_search(M_obs, candidates, cfg, args.depth,
                                                  holdout=0.2, seed=cfg.seed, mask=mask)
        print("p,q,rank,holdout_mse")
        for row in rows:
            print(f"{row[0]},{row[1]},{row[2]},{formats.render_float(row[3], allow_nan=True)}")
        print(f"selected p={layout.p} q={layout.q} rank={rank}")
    else:
        if args.p is None or args.q is None or args.rank is None:
            raise UsageError("complete needs --p, --q and --rank (or --grid)")
        layout, rank = complete.BlockLayout(args.p, args.q), args.rank
        if layout.n != M_obs.shape[0]:
            raise UsageError(f"p*q={layout.n} does not match matrix side {M_obs.shape[0]}")
    unseen = ~mask.observed.reshape(layout.p, layout.q, layout.p, layout.q).any(axis=(1, 3))
    for i, j in np.argwhere(np.triu(unseen)):
        print(f"fully missing block ({i + 1},{j + 1})")
    arch = complete.completion_arch(layout.q, rank, args.depth)
    M_hat, _, log = complete.complete_matrix(M_obs, layout, arch, cfg, mask)
    formats.write_text(args.out, formats.render_matrix(M_hat))
    print(f"observed_mse {formats.render_float(log.final_loss)}")
    return 0


def cmd_convert(args):
    if args.to == "kraus":
        if args.matrix is None or args.p is None or args.q is None:
            raise UsageError("convert --to kraus needs --matrix, --p and --q")
        M = formats.parse_matrix(formats.read_text(args.matrix))
        layer = cpmap.kraus_from_choi(cpmap.ChoiMatrix(args.p, args.q, M), args.tol)
        formats.write_text(args.out, formats.render_model(StackedModel((layer,))))
        return 0
    if args.model is None:
        raise UsageError(f"convert --to {args.to} needs --model")
    model = _load_model(args.model)
    if model.depth != 1:
        raise UsageError("only depth-1 models have Choi/Stinespring representations")
    layer = model.layers[0]
    if args.to == "choi":
        formats.write_text(args.out, formats.render_matrix(cpmap.choi(layer).mat))
    else:
        formats.write_text(args.out, formats.render_stinespring(cpmap.to_stinespring(layer)))
    return 0


def cmd_bound(args):
    inputs = bounds.BoundInputs(args.p, args.q, args.rank, args.l, args.gamma, args.delta)
    try:
        gap = bounds.generalization_gap(inputs)
        pdim = bounds.pseudo_dim_bound(args.p, args.q, args.rank)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"pseudo_dimension_bound {pdim:.10g}")
    print(f"generalization_gap {gap:.10g}")
    print(f"({bounds.LOG_CONVENTION})")
    return 0


def cmd_gradcheck(args):
    worst = 0.0
    for t in range(args.trials):
        dev = train.gradcheck_case(args.p, args.q, args.rank, args.depth, args.seed + t)
        worst = max(worst, dev)
    print(f"max_relative_deviation {worst:.3e}")
    return 0


def cmd_baseline(args):
    data = _load_dataset(args.data)
    test = _load_dataset(args.test) if args.test else None
    cfg = _train_config(args)
    ranks = parse_int_list(args.rank_grid)
    rows = []
    if args.method == "mlr":
        fitted = [(None, baselines.fit_multivariate_ls(data))]
    elif args.method == "rrr":
        limit = min(data.p ** 2, data.q ** 2)
        fitted = [(k, baselines.fit_reduced_rank(data, k)) for k in ranks if k <= limit]
    else:
        fitted = [(r, baselines.fit_trace_regression(data, r, cfg)[0]) for r in ranks]
    for rank, model in fitted:
        tr_mse = train.mean_entry_mse(baselines.predict(model, data.X), data.Y)
        te_mse = (train.mean_entry_mse(baselines.predict(model, test.X), test.Y)
                  if test is not None else float("nan"))
        rows.append((args.method, "" if rank is None else rank, tr_mse, te_mse))
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "rank", "train_mse", "test_mse"])
        for m, r, a, b in rows:
            w.writerow([m, r, formats.render_float(a), formats.render_float(b, allow_nan=True)])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ptreg", description="Partial trace regression with Kraus decompositions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="generate a synthetic regression dataset")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--sigma", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--map-seed", type=int, default=None,
                    help="seed of the true map (default: --seed); share it across train/test files")
    sp.add_argument("--input-law", choices=("psd", "gaussian"), default="psd")
    sp.add_argument("--general", action="store_true",
                    help="targets from sum_j A_j X B_j^T with an independent B (not CP)")
    sp.add_argument("--true-model", help="also write the generating map as a ModelFile")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit a stacked Kraus model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--arch", required=True, help="q1:r1[,q2:r2...]")
    _add_train_flags(sp)
    sp.add_argument("--eps", type=float, default=DEFAULT_EPS, help="activation eigenvalue floor")
    sp.add_argument("--out", required=True)
    sp.add_argument("--log", help="CSV of per-epoch training MSE")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="run a model over a dataset's inputs")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("eval", help="per-entry mean squared error of a model on a dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("complete", help="PSD matrix completion (nan = missing)")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--rank", type=int)
    sp.add_argument("--depth", type=int, default=1)
    _add_train_flags(sp, epochs=1000)
    sp.add_argument("--grid", action="store_true",
                    help="select (p, q, rank) on a 20%% observed-entry holdout")
    sp.add_argument("--ranks", default="1,2,5,10,20,50,100", help="rank grid for --grid")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("convert", help="Choi / Stinespring / Kraus conversions")
    sp.add_argument("--model")
    sp.add_argument("--matrix", help="Choi MatrixFile (for --to kraus)")
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--to", choices=("choi", "stinespring", "kraus"), required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("bound", help="generalisation-gap calculator")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--rank", type=int, required=True)
    sp.add_argument("--depth", type=int, default=1)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("baseline", help="trace regression / OLS / reduced-rank OLS")
    sp.add_argument("--data", required=True)
    sp.add_argument("--test")
    sp.add_argument("--method", choices=("tr", "mlr", "rrr"), required=True)
    sp.add_argument("--rank-grid", default="1,2,5,10,20,50,100")
    _add_train_flags(sp)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_baseline)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except cpmap.NotCompletelyPositiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (formats.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
