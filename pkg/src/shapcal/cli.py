"""Command-line front end.

Exit status: 0 success, 2 usage error, 3 data or parse error, 4 numeric
failure (non-finite values, diverging regressor), 1 replay mismatch.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as D
from . import inflation as I
from . import knn, reports, scenarios
from .pipelines import RegressorError, RemovalPolicy, select_removed
from .valuation import (EXACT_CAP, ValuationError, ValuationParams, aggregate_over_validation,
                        canonical_method, load_csv_values)

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_MISMATCH = 2, 3, 4, 1

# execution knobs that never change results; kept out of embedded configs so
# reports are byte-identical across thread counts and output locations
_NOT_CONFIG = {"func", "threads", "out_dir", "config_path"}


class NumericError(RuntimeError):
    pass


def _default_seed():
    env = os.environ.get("SHAPCAL_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise argparse.ArgumentTypeError(f"SHAPCAL_SEED={env!r} is not an integer") from None


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _out(args) -> Path:
    p = Path(args.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _label(s):
    return int(s) if s.lstrip("-").isdigit() else s


def _load_splits(args):
    header = not args.no_header
    label = _label(args.label)
    train = D.load_csv(args.train, label, header)
    lm = D.label_map_of(train)
    val = D.load_csv(args.val, label, header, label_map=lm)
    test = None
    if getattr(args, "test", None):
        test = D.load_csv(args.test, label, header, label_map=lm)
    parts = [x for x in (train, val, test) if x is not None]
    C = max(x.num_classes for x in parts)
    names = D.label_map_of(parts[-1])
    names = tuple(sorted(names, key=names.get))
    fix = lambda x: None if x is None else D.Dataset(x.X, x.y, C, label_names=names)
    train, val, test = fix(train), fix(val), fix(test)
    for x, name in ((val, "val"), (test, "test")):
        if x is not None and x.dim != train.dim:
            raise D.DatasetError(f"{name} has {x.dim} features, train has {train.dim}")
    if args.normalize:
        mean, std = train.X.mean(axis=0), train.X.std(axis=0)
        train, val = train.standardized(mean, std), val.standardized(mean, std)
        test = None if test is None else test.standardized(mean, std)
    return train, val, test


def _params(args):
    return ValuationParams(K=args.k, T=args.t, metric=args.metric)


def _policy(args):
    if args.policy is None:
        return None
    return RemovalPolicy(args.policy, args.q, args.strict)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NumericError("valuation produced non-finite values")


def _valuate(args, train, val):
    method = canonical_method(args.method)
    if method == "exact" and len(train) > EXACT_CAP:
        raise ValuationError(
            f"--method exact enumerates 2**N coalitions; N={len(train)} exceeds the cap of {EXACT_CAP}")
    vec = aggregate_over_validation(train, val, method, _params(args), threads=args.threads,
                                    normalize=args.mean)
    _check_finite(vec.values)
    return vec


# --------------------------------------------------------------------------
# commands

def cmd_synth(args):
    ds = D.synth_blobs(args.n, args.dim, args.classes, args.separation, args.noise, args.seed)
    mask = None
    if args.flip > 0:
        ds, mask = D.flip_labels(ds, args.flip, args.seed)
    out = _out(args)
    D.save_csv(ds, out / "data.csv")
    results = {"n": len(ds), "dim": ds.dim, "num_classes": ds.num_classes,
               "flipped_ids": [] if mask is None else mask.flipped_ids}
    reports.write_json(out / "synth.json", reports.envelope("synth", _config(args), results))
    print(f"wrote {len(ds)} samples to {out / 'data.csv'}")


def cmd_split(args):
    ds = D.load_csv(args.input, _label(args.label), not args.no_header)
    parts = D.split(ds, args.fractions, args.seed)
    out = _out(args)
    sizes = {}
    for name, part in zip(("train", "val", "test"), parts):
        D.save_csv(part, out / f"{name}.csv")
        sizes[name] = len(part)
    results = {"sizes": sizes, "source_ids": {n: p.origin for n, p in
                                              zip(("train", "val", "test"), parts)}}
    reports.write_json(out / "split.json", reports.envelope("split", _config(args), results))
    print(" ".join(f"{k}={v}" for k, v in sizes.items()))


def cmd_value(args):
    train, val, _ = _load_splits(args)
    vec = _valuate(args, train, val)
    out = _out(args)
    reports.write_csv(out / "values.csv", ["train_id", "value"], enumerate(vec.values))
    v = vec.values
    summary = {"n": len(v), "min": float(v.min()), "max": float(v.max()),
               "mean": float(v.mean()), "count_nonpositive": int(np.count_nonzero(v <= 0)),
               "count_negative": int(np.count_nonzero(v < 0))}
    results = {"valuation": vec.as_dict(), "summary": summary}
    policy = _policy(args)
    if policy is not None:
        removed = select_removed(v, policy)
        reports.write_csv(out / "removed.csv", ["train_id"], [(int(i),) for i in removed])
        keep = np.setdiff1d(np.arange(len(train)), removed)
        results["removal"] = {
            "policy": policy.as_dict(), "n_removed": len(removed),
            "accuracy_all": knn.accuracy(train, val, args.k, args.metric),
            "accuracy_after_removal": (knn.accuracy(train.subset(keep), val, args.k, args.metric)
                                       if len(keep) else None),
        }
    reports.write_json(out / "values.json", reports.envelope("value", _config(args), results))
    print(f"{vec.method} K={vec.params.K} T={vec.params.T} n={summary['n']} "
          f"min={summary['min']:.6g} max={summary['max']:.6g} mean={summary['mean']:.6g} "
          f"nonpositive={summary['count_nonpositive']}")


def cmd_inflation(args):
    train, val, test = _load_splits(args)
    if args.values:
        values = load_csv_values(args.values)
        if len(values) != len(train):
            raise D.DatasetError(f"{args.values}: {len(values)} values for {len(train)} samples")
        _check_finite(values)
        method = "precomputed"
    else:
        vec = _valuate(args, train, val)
        values, method = vec.values, vec.method
    if args.eval == "test" and test is None:
        raise D.DatasetError("--eval test needs --test")
    eval_set = test if args.eval == "test" else val
    seg = I.segment_bins(values, args.bins)
    curve = I.bin_removal_curve(train, eval_set, seg, args.k, args.metric, threads=args.threads,
                                eval_name="test" if args.eval == "test" else "validation")
    rep = I.inflation_metrics(curve, seg)
    out = _out(args)
    I.export_curve_csv(curve, seg, out / "curve.csv")
    results = {"method": method, "eval_set": curve.eval_name, "report": rep.as_dict(),
               "curve": {"p0": curve.p0, "p": curve.p, "bin_value": seg.bin_value}}
    reports.write_json(out / "inflation.json", reports.envelope("inflation", _config(args), results))
    if rep.status == I.NO_DETRIMENTAL_BOUNDARY:
        print(f"status={rep.status} p0={rep.p0:.4f}")
    else:
        print(f"status={rep.status} j*={rep.j_star} i*={rep.i_star} t={rep.t:.6g} r={rep.r:.4f}")


def _run_scenario(cfg, out, threads):
    kind = cfg["scenario"]
    results, (header, rows) = scenarios.RUNNERS[kind](cfg, threads=threads)
    reports.write_csv(out / f"{kind}.csv", header, rows)
    reports.write_json(out / f"{kind}.json", reports.envelope("scenario", cfg, results))
    return results


def cmd_scenario(args):
    try:
        with open(args.config_path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise D.DatasetError(f"{args.config_path}: invalid JSON: {e}") from None
    seed = args.seed
    cfg = scenarios.resolve_config(raw, args.kind, seed=seed)
    if args.seed_given:
        cfg["seed"] = args.seed
    results = _run_scenario(cfg, _out(args), args.threads)
    kind = cfg["scenario"]
    if kind == "mislabel":
        c = results["counts"]
        print(f"I={c['I']} II={c['II']} III={c['III']} recall={results['recall']} "
              f"precision={results['precision']}")
    elif kind == "online":
        accs = [b["accuracy"] for b in results["run"]["batches"]]
        print("accuracy per batch: " + " ".join(f"{a:.4f}" for a in accs))
    else:
        for s, run in results["runs"].items():
            print(f"{s}: " + " ".join(f"{a:.4f}" for a in run["accuracies"]))


REPORT_FILES = {"synth": "synth.json", "split": "split.json", "value": "values.json",
                "inflation": "inflation.json"}


def cmd_replay(args):
    src = Path(args.report)
    with open(src, encoding="utf-8") as fh:
        original = fh.read()
    report = json.loads(original)
    command, cfg = report["command"], report["config"]
    out = _out(args)
    if command == "scenario":
        _run_scenario(cfg, out, args.threads)
        produced = out / f"{cfg['scenario']}.json"
    else:
        ns = argparse.Namespace(**cfg, threads=args.threads, out_dir=str(out))
        COMMANDS[command](ns)
        produced = out / REPORT_FILES[command]
    same = produced.read_text(encoding="utf-8") == original
    print(f"replay {'reproduced' if same else 'DIFFERS from'} {src}")
    return 0 if same else EXIT_MISMATCH


COMMANDS = {"synth": cmd_synth, "split": cmd_split, "value": cmd_value,
            "inflation": cmd_inflation, "scenario": cmd_scenario, "replay": cmd_replay}


# --------------------------------------------------------------------------
# parser

def _common(p, seed=True):
    p.add_argument("--out-dir", default=".", help="directory for output files")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    if seed:
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (falls back to $SHAPCAL_SEED, then 0)")


def _data_args(p, test=False):
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    if test:
        p.add_argument("--test")
    p.add_argument("--label", default="-1", help="label column name, or index without a header")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--normalize", action="store_true", help="z-score features with train statistics")


def _valuation_args(p):
    p.add_argument("--method", choices=["exact", "knn", "cknn"], default="cknn")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--t", type=int, default=None, help="calibration size T (default N-2K)")
    p.add_argument("--metric", choices=list(knn.METRICS), default="euclidean")
    p.add_argument("--mean", action="store_true", help="average instead of sum over validation points")


def build_parser():
    parser = argparse.ArgumentParser(prog="shapcal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate Gaussian blobs as CSV")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--flip", type=float, default=0.0)
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="seeded train/val/test split of a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--label", default="-1")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--fractions", type=float, nargs=3, default=[0.8, 0.1, 0.1])
    _common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("value", help="value training samples against a validation set")
    _data_args(p)
    _valuation_args(p)
    p.add_argument("--policy", choices=["negative", "bottom"], default=None)
    p.add_argument("--q", type=float, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", dest="strict", action="store_true", default=True)
    g.add_argument("--inclusive", dest="strict", action="store_false")
    _common(p)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("inflation", help="bin-removal curve and threshold / misidentification ratio")
    _data_args(p, test=True)
    _valuation_args(p)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--eval", choices=["val", "test"], default="val")
    p.add_argument("--values", default=None, help="precomputed values CSV (train_id,value)")
    _common(p)
    p.set_defaults(func=cmd_inflation)

    p = sub.add_parser("scenario", help="run a JSON-configured scenario")
    p.add_argument("kind", choices=list(scenarios.SCENARIOS))
    p.add_argument("--config", dest="config_path", required=True)
    _common(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("replay", help="re-run a report's config and compare the output")
    p.add_argument("--report", required=True)
    _common(p, seed=False)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "seed"):
        args.seed_given = args.seed is not None
        if args.seed is None:
            try:
                args.seed = _default_seed()
            except argparse.ArgumentTypeError as e:
                parser.error(str(e))
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if getattr(args, "policy", None) == "bottom" and args.q is None:
        parser.error("--policy bottom needs --q")
    try:
        if args.command != "scenario":
            vars(args).pop("seed_given", None)
        rc = args.func(args)
    except scenarios.ConfigError as e:
        print(f"shapcal: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, RegressorError, FloatingPointError) as e:
        print(f"shapcal: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (D.DatasetError, ValuationError, ValueError, OSError, KeyError) as e:
        print(f"shapcal: {e}", file=sys.stderr)
        return EXIT_DATA
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
