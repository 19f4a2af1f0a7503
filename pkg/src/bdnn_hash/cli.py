"""Command-line entry point.

Exit status: 0 on success, 1 on an internal error, 2 on a usage or input error.
"""

import argparse
import os
import sys

from . import io
from .config import load_config
from .network import encode, fit_standardizer, load_model, save_model, standardize
from .search_eval import (
    class_ground_truth,
    euclidean_ground_truth,
    evaluate,
    pack,
    precision_radius_curve,
)
from .sh_bdnn import train_sh
from .synth import gaussian_mixture
from .uh_bdnn import train_uh


class UsageError(Exception):
    """Bad input or arguments; reported with exit status 2."""


def _fail(msg):
    raise UsageError(msg)


def _dataset(path):
    X = io.read_dataset(path)
    if X.shape[1] == 0:
        _fail(f"{path}: dataset has no samples")
    if X.shape[0] == 0:
        _fail(f"{path}: dataset has no dimensions")
    return X


def cmd_train(args):
    cfg = load_config(args.config)
    if cfg.mode == "sh" and not args.labels:
        _fail("--labels is required when mode = sh")
    X = _dataset(args.data)
    standardizer = None
    if cfg.standardize:
        standardizer = fit_standardizer(X)
        X = standardize(X, standardizer)
    train_cfg = cfg.train_config(X.shape[0])
    if cfg.mode == "sh":
        Y = io.read_labels(args.labels)
        if Y.size != X.shape[1]:
            _fail(f"{args.labels}: {Y.size} labels for {X.shape[1]} samples")
        result = train_sh(X, Y, train_cfg)
    else:
        result = train_uh(X, train_cfg)
    trace_path = args.trace or args.out + ".trace.csv"
    save_model(args.out, result.params, standardizer)
    header = {"mode": cfg.mode, "seed": cfg.seed, "L": result.params.schedule.code_length,
              "sizes": "-".join(map(str, result.params.schedule.sizes))}
    io.write_trace(trace_path, result.history, header)
    if args.codes_out:
        io.write_codes(args.codes_out, pack(result.codes))
    if args.plot:
        from .plotting import plot_trace
        plot_trace(result.history, os.path.splitext(trace_path)[0] + ".png",
                   title=f"{cfg.mode} L={result.params.schedule.code_length} seed={cfg.seed}")
    print(f"seed={cfg.seed} mode={cfg.mode} final_objective={result.history[-1][2]!r}")
    return 0


def cmd_encode(args):
    params, standardizer = load_model(args.model)
    X = _dataset(args.data)
    if X.shape[0] != params.schedule.input_dim:
        _fail(f"data dimension {X.shape[0]} does not match model input {params.schedule.input_dim}")
    if standardizer is not None:
        X = standardize(X, standardizer)
    codes = pack(encode(params, X))
    io.write_codes(args.out, codes)
    print(f"encoded {codes.count} samples with L={codes.L}")
    return 0


def cmd_groundtruth(args):
    X_db = _dataset(args.db)
    X_q = _dataset(args.queries)
    if X_db.shape[0] != X_q.shape[0]:
        _fail("database and queries differ in dimension")
    if args.db_labels or args.query_labels:
        if not (args.db_labels and args.query_labels):
            _fail("class ground truth needs both --db-labels and --query-labels")
        y_db = io.read_labels(args.db_labels)
        y_q = io.read_labels(args.query_labels)
        if y_db.size != X_db.shape[1] or y_q.size != X_q.shape[1]:
            _fail("label count does not match sample count")
        gt = class_ground_truth(y_db, y_q)
    else:
        if args.k is None:
            _fail("--k is required for Euclidean ground truth")
        if not 1 <= args.k <= X_db.shape[1]:
            _fail(f"k={args.k} must lie in [1, {X_db.shape[1]}]")
        gt = euclidean_ground_truth(X_db, X_q, args.k)
    io.write_ground_truth(args.out, gt)
    return 0


def cmd_eval(args):
    db = io.read_codes(args.db_codes)
    queries = io.read_codes(args.query_codes)
    if db.L != queries.L:
        _fail(f"code lengths differ: database L={db.L}, queries L={queries.L}")
    gt = io.read_ground_truth(args.gt)
    if len(gt) != queries.count:
        _fail(f"{len(gt)} ground-truth rows for {queries.count} queries")
    for row in gt:
        if row.size and (row.min() < 0 or row.max() >= db.count):
            _fail("ground-truth index out of range")
    if args.top_k is not None and args.top_k < 1:
        _fail("--top-k must be >= 1")
    k_gt = len(gt[0]) if gt and len({len(r) for r in gt}) == 1 else None
    report = evaluate(db, queries, gt, top_k=args.top_k, radius=args.radius, k_gt=k_gt)
    out = args.out or os.path.splitext(args.gt)[0] + ".eval.csv"
    io.write_report(out, report)
    if args.plot:
        from .plotting import plot_eval
        radii, curve = precision_radius_curve(db, queries, gt)
        plot_eval(report, radii, curve, os.path.splitext(out)[0] + ".png")
    print(f"queries={queries.count} L={db.L} map={report.map:.6f} "
          f"precision@{args.radius}={report.precision_at_radius2:.6f}")
    return 0


def cmd_synth(args):
    try:
        X, y = gaussian_mixture(args.clusters, args.dims, args.samples, args.separation,
                                args.sigma, args.seed)
    except ValueError as exc:
        _fail(str(exc))
    io.write_dataset(args.out, X)
    if args.labels_out:
        io.write_labels(args.labels_out, y)
    if args.queries:
        if not args.queries_out:
            _fail("--queries needs --queries-out")
        # queries come from the same mixture with an independent stream
        Xq, yq = gaussian_mixture(args.clusters, args.dims, args.queries, args.separation,
                                  args.sigma, args.seed + 1_000_003)
        io.write_dataset(args.queries_out, Xq)
        if args.query_labels_out:
            io.write_labels(args.query_labels_out, yq)
    print(f"seed={args.seed} wrote {X.shape[1]} samples of dimension {X.shape[0]}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="bdnn-hash",
                                description="Binary deep network hashing toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a UH/SH model from a config file")
    t.add_argument("--config", required=True, help="key=value run configuration")
    t.add_argument("--data", required=True, help="BHDM training data")
    t.add_argument("--labels", help="uint32 labels (required for mode = sh)")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--trace", help="objective trace CSV (default: <out>.trace.csv)")
    t.add_argument("--codes-out", help="also write the final training codes B")
    t.add_argument("--plot", action="store_true", help="render the trace as PNG")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("encode", help="hash a dataset with a trained model")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True, help="BHCB packed codes to write")
    e.set_defaults(func=cmd_encode)

    g = sub.add_parser("groundtruth", help="Euclidean k-NN or class-label ground truth")
    g.add_argument("--db", required=True)
    g.add_argument("--queries", required=True)
    g.add_argument("--k", type=int, help="neighbors per query (Euclidean)")
    g.add_argument("--db-labels", help="class ground truth: database labels")
    g.add_argument("--query-labels", help="class ground truth: query labels")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_groundtruth)

    v = sub.add_parser("eval", help="mAP and precision within a Hamming radius")
    v.add_argument("--db-codes", required=True)
    v.add_argument("--query-codes", required=True)
    v.add_argument("--gt", required=True)
    v.add_argument("--top-k", type=int, help="truncate mAP to the top-k retrieved items")
    v.add_argument("--radius", type=int, default=2)
    v.add_argument("--out", help="per-query CSV (default: <gt>.eval.csv)")
    v.add_argument("--plot", action="store_true", help="render AP histogram and radius curve")
    v.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a Gaussian-mixture dataset")
    s.add_argument("--clusters", type=int, default=3)
    s.add_argument("--dims", type=int, default=16)
    s.add_argument("--samples", type=int, default=100, help="samples per cluster")
    s.add_argument("--separation", type=float, default=6.0, help="mean distance in sigmas")
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--labels-out")
    s.add_argument("--queries", type=int, default=0, help="query samples per cluster")
    s.add_argument("--queries-out")
    s.add_argument("--query-labels-out")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
