"""Command line frontend: generate, train, predict, eval, sweep, cv.

Exit codes: 0 on success, 1 for data errors (malformed input), 2 for usage
errors (bad flags, bad combinations, missing files).
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from . import data as dat
from . import learners, pipeline


def _csv_list(text: str) -> List[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _csv_ints(text: str) -> List[int]:
    return [int(tok) for tok in _csv_list(text)]


def _csv_floats(text: str) -> List[float]:
    return [float(tok) for tok in _csv_list(text)]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ofs",
        description="Budgeted online feature selection for sparse streams.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset to a directory")
    g.add_argument("--dim", type=int, required=True, help="total dimensionality")
    g.add_argument("--idim", type=int, required=True, help="informative features per example")
    g.add_argument("--ndim", type=int, required=True, help="noise features per example")
    g.add_argument("--train", type=int, required=True, help="training examples")
    g.add_argument("--test", type=int, required=True, help="test examples")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--gz", action="store_true", help="gzip the data files")
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="train one model on a libsvm file")
    t.add_argument("--algo", choices=learners.ALGOS, required=True)
    t.add_argument("--B", type=int, default=None, help="selection budget (sofs/pet/fofs)")
    t.add_argument("--gamma", type=float, default=1.0)
    t.add_argument("--eta", type=float, default=0.2)
    t.add_argument("--lambda", dest="lam", type=float, default=0.01)
    t.add_argument("--data", required=True)
    t.add_argument("--model", required=True, help="where to write the model")
    t.add_argument("--threads", type=int, default=None)
    t.add_argument("--queue-cap", type=int, default=pipeline.DEFAULT_QUEUE_CAPACITY)
    t.set_defaults(func=_cmd_train)

    pr = sub.add_parser("predict", help="write one predicted label per line")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--out", default=None, help="output file (default stdout)")
    pr.set_defaults(func=_cmd_predict)

    e = sub.add_parser("eval", help="accuracy of a saved model on a libsvm file")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument(
        "--recovery",
        default=None,
        metavar="TRUTH",
        help="also report |selected & truth| / |truth| against a ground-truth index file",
    )
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("sweep", help="benchmark algorithms across budgets and repeats")
    s.add_argument("--algos", required=True, help="comma list from: " + ",".join(learners.ALGOS))
    s.add_argument("--B", required=True, help="comma list of budgets")
    s.add_argument("--train", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--csv", default=None, help="also write rows to this CSV file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--eta", type=float, default=0.2)
    s.add_argument("--lambda", dest="lam", type=float, default=0.01)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--dim", type=int, default=None, help="declared dimensionality for sparsity")
    s.add_argument("--max-in-memory", type=int, default=1_000_000)
    s.set_defaults(func=_cmd_sweep)

    c = sub.add_parser("cv", help="pick hyperparameters by k-fold cross validation")
    c.add_argument("--algo", choices=learners.ALGOS, required=True)
    c.add_argument("--B", type=int, default=None)
    c.add_argument("--data", required=True)
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--gammas", default="1.0")
    c.add_argument("--etas", default="0.2")
    c.add_argument("--lambdas", default="0.01")
    c.set_defaults(func=_cmd_cv)

    return p


def _require_budget(parser: argparse.ArgumentParser, algo: str, budget: Optional[int]) -> None:
    if algo in learners.BUDGETED and (budget is None or budget < 1):
        parser.error(f"--B >= 1 is required for {algo}")


def _require_files(parser: argparse.ArgumentParser, *paths: Optional[str]) -> None:
    for path in paths:
        if path is not None and not os.path.exists(path):
            parser.error(f"no such file: {path}")


def _cmd_generate(args) -> int:
    spec = dat.SyntheticSpec(
        n_train=args.train,
        n_test=args.test,
        dim=args.dim,
        idim=args.idim,
        ndim=args.ndim,
        seed=args.seed,
    )
    train, test, truth = dat.generate_synthetic(spec)
    os.makedirs(args.out, exist_ok=True)
    suffix = ".svm.gz" if args.gz else ".svm"
    train_path = os.path.join(args.out, "train" + suffix)
    test_path = os.path.join(args.out, "test" + suffix)
    truth_path = os.path.join(args.out, "informative.txt")
    dat.write_libsvm(train, train_path)
    dat.write_libsvm(test, test_path)
    with open(truth_path, "w", encoding="ascii") as fh:
        fh.write("# 1-based indices of the informative features\n")
        for j in sorted(truth):
            fh.write(f"{j + 1}\n")
    print(f"wrote {train_path} ({spec.n_train} examples)")
    print(f"wrote {test_path} ({spec.n_test} examples)")
    print(f"wrote {truth_path} ({len(truth)} indices)")
    return 0


def _cmd_train(args) -> int:
    learner = learners.make_learner(
        args.algo, budget=args.B, gamma=args.gamma, eta=args.eta, lam=args.lam
    )
    stream = dat.DatasetStream.from_file(args.data)
    result = pipeline.train_stream(
        learner, stream, threads=args.threads, queue_capacity=args.queue_cap
    )
    learners.save_model(learner, args.model)
    rate = result.mistakes / result.examples if result.examples else 0.0
    print(
        f"trained {args.algo} on {result.examples} examples: "
        f"{result.mistakes} mistakes (rate {rate:.4f}), "
        f"{learner.nonzero_count()} nonzero weights, {result.train_seconds:.3f}s"
    )
    print(f"model written to {args.model}")
    return 0


def _cmd_predict(args) -> int:
    model = learners.load_model(args.model)
    lines = [f"{model.predict(ex):+d}" for ex in dat.read_libsvm(args.data)]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
        print(f"wrote {len(lines)} predictions to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _read_truth(path) -> frozenset:
    truth = set()
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            truth.add(int(line) - 1)  # file is 1-based like the data files
    if not truth:
        raise ValueError(f"{path}: no indices found")
    return frozenset(truth)


def _cmd_eval(args) -> int:
    model = learners.load_model(args.model)
    accuracy = pipeline.evaluate(model, dat.read_libsvm(args.data))
    print(f"accuracy {accuracy:.6f}")
    if args.recovery:
        truth = _read_truth(args.recovery)
        selected = model.selected_indices()
        hits = len(selected & truth)
        print(f"recovery {hits / len(truth):.6f} ({hits}/{len(truth)})")
    return 0


def _cmd_sweep(args) -> int:
    algos = _csv_list(args.algos)
    for algo in algos:
        if algo not in learners.ALGOS:
            raise ValueError(f"unknown algorithm {algo!r}")
    budgets = _csv_ints(args.B)
    reports = pipeline.benchmark_sweep(
        algos,
        budgets,
        dat.DatasetStream.from_file(args.train),
        dat.DatasetStream.from_file(args.test),
        args.repeats,
        base_seed=args.seed,
        gamma=args.gamma,
        eta=args.eta,
        lam=args.lam,
        threads=args.threads,
        dim=args.dim,
        max_in_memory=args.max_in_memory,
    )
    print(pipeline.format_report_table(reports))
    if args.csv:
        pipeline.write_reports_csv(reports, args.csv)
        print(f"wrote {len(reports)} rows to {args.csv}")
    return 0


def _cmd_cv(args) -> int:
    grid = pipeline.CvGrid(
        gammas=_csv_floats(args.gammas),
        etas=_csv_floats(args.etas),
        lambdas=_csv_floats(args.lambdas),
        folds=args.folds,
    )
    stream = dat.DatasetStream.from_file(args.data)
    best, results = pipeline.cross_validate(args.algo, args.B, grid, stream)
    for params, acc in results:
        shown = " ".join(f"{k}={v:g}" for k, v in params.items())
        print(f"{shown}: {acc:.6f}")
    shown = " ".join(f"{k}={v:g}" for k, v in best.items())
    print(f"best: {shown}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # validate combinations before touching any input
    if args.command in ("train", "cv"):
        _require_budget(parser, args.algo, args.B)
    if args.command == "sweep":
        for algo in _csv_list(args.algos):
            if algo in learners.BUDGETED:
                budgets = _csv_ints(args.B)
                if not budgets or min(budgets) < 1:
                    parser.error(f"--B >= 1 is required for {algo}")
    if args.command == "train":
        _require_files(parser, args.data)
    elif args.command in ("predict", "eval"):
        _require_files(parser, args.model, args.data)
        if args.command == "eval":
            _require_files(parser, args.recovery)
    elif args.command == "sweep":
        _require_files(parser, args.train, args.test)
    elif args.command == "cv":
        _require_files(parser, args.data)

    try:
        return args.func(args)
    except dat.LibsvmFormatError as err:
        print(f"ofs: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"ofs: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"ofs: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
