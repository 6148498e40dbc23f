"""JSON-configured scenario runs: mislabel detection, online stream, active learning.

A config is validated against :data:`CONFIG_SCHEMA` (every violation is
reported, not just the first), defaults are filled in, and the resolved
config is what gets embedded in the report, so a report alone is enough to
replay its run.
"""
from __future__ import annotations

import copy

import jsonschema
import numpy as np

from . import dataset as ds_mod
from . import knn
from .pipelines import (RegressorConfig, RemovalPolicy, active_learning_run, blob_task,
                        mislabel_analysis, online_run, select_removed)
from .valuation import ValuationParams, aggregate_over_validation, canonical_method

SCENARIOS = ("mislabel", "online", "active")

_DATA_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "source": {"const": "blobs"},
                "n_train": {"type": "integer", "minimum": 2},
                "n_val": {"type": "integer", "minimum": 1},
                "n_test": {"type": "integer", "minimum": 0},
                "dim": {"type": "integer", "minimum": 1},
                "num_classes": {"type": "integer", "minimum": 2},
                "separation": {"type": "number", "exclusiveMinimum": 0},
                "noise_std": {"type": "number", "minimum": 0},
            },
            "required": ["source"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "source": {"const": "csv"},
                "train": {"type": "string"},
                "val": {"type": "string"},
                "test": {"type": "string"},
                "label": {"type": ["string", "integer"]},
                "has_header": {"type": "boolean"},
                "normalize": {"type": "boolean"},
            },
            "required": ["source", "train", "val"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "shapcal scenario config",
    "type": "object",
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "seed": {"type": "integer", "minimum": 0},
        "data": _DATA_SCHEMA,
        "method": {"enum": ["exact", "knn", "cknn", "knn_shapley", "cknn_shapley"]},
        "k": {"type": "integer", "minimum": 1},
        "t": {"type": ["integer", "null"], "minimum": 0},
        "metric": {"enum": list(knn.METRICS)},
        "policy": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["negative", "bottom", "negative_values", "bottom_fraction"]},
                "q": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "strict": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "flip_ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "n_batches": {"type": "integer", "minimum": 1},
        "baseline": {"type": "boolean"},
        "rounds": {"type": "integer", "minimum": 0},
        "batch_size": {"type": "integer", "minimum": 1},
        "initial_labeled": {"type": "integer", "minimum": 1},
        "strategies": {
            "type": "array", "minItems": 1, "uniqueItems": True,
            "items": {"enum": ["shapley_pred", "random", "entropy", "margin", "uncertainty"]},
        },
        "regressor": {
            "type": "object",
            "properties": {
                "hidden": {"type": "integer", "minimum": 1},
                "lr": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_DEFAULTS = {
    "common": {"seed": 0, "method": "cknn", "k": 10, "t": None, "metric": "euclidean",
               "policy": {"kind": "negative", "q": None, "strict": True}},
    "blobs": {"source": "blobs", "n_train": 1000, "n_val": 100, "n_test": 0, "dim": 2,
              "num_classes": 2, "separation": 4.0, "noise_std": 1.0},
    "csv": {"label": -1, "has_header": True, "normalize": False},
    "mislabel": {"flip_ratio": 0.3},
    "online": {"flip_ratio": 0.3, "n_batches": 10, "baseline": True},
    "active": {"flip_ratio": 0.0, "rounds": 8, "batch_size": 200, "initial_labeled": 400,
               "strategies": ["shapley_pred", "random", "entropy", "margin", "uncertainty"],
               "regressor": {"hidden": 64, "lr": 1e-2, "epochs": 500}},
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scenario config:\n  " + "\n  ".join(self.errors))


def validate_config(cfg, scenario=None):
    """Every schema violation in ``cfg`` as a readable message (empty if valid)."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.path))):
        where = "/".join(str(p) for p in err.path) or "<root>"
        errors.append(f"{where}: {err.message}")
    if isinstance(cfg, dict):
        sc = cfg.get("scenario", scenario)
        if scenario and cfg.get("scenario") not in (None, scenario):
            errors.append(f"scenario: config is for {cfg['scenario']!r}, not {scenario!r}")
        if sc is None:
            errors.append("scenario: missing (give it in the config or on the command line)")
        pol = cfg.get("policy") or {}
        if pol.get("kind") in ("bottom", "bottom_fraction") and pol.get("q") is None:
            errors.append("policy/q: required for bottom-fraction removal")
        if pol.get("kind") in ("negative", "negative_values", None) and pol.get("q") is not None:
            errors.append("policy/q: only valid for bottom-fraction removal")
    return errors


def resolve_config(cfg, scenario=None, seed=None):
    """Validate and fill defaults; raises :class:`ConfigError` listing all problems."""
    errors = validate_config(cfg, scenario)
    if errors:
        raise ConfigError(errors)
    cfg = copy.deepcopy(cfg)
    sc = cfg.get("scenario", scenario)
    out = {"scenario": sc}
    out.update(copy.deepcopy(_DEFAULTS["common"]))
    out.update(copy.deepcopy(_DEFAULTS[sc]))
    if seed is not None and "seed" not in cfg:
        out["seed"] = seed
    for k, v in cfg.items():
        if k in ("policy", "regressor") and isinstance(v, dict):
            out[k] = {**out.get(k, {}), **v}
        elif k != "data":
            out[k] = v
    data = cfg.get("data", {"source": "blobs"})
    base = _DEFAULTS["blobs"] if data["source"] == "blobs" else _DEFAULTS["csv"]
    out["data"] = {**base, **data}
    out["method"] = {"knn_shapley": "knn", "cknn_shapley": "cknn"}.get(out["method"], out["method"])
    out["policy"]["kind"] = {"negative_values": "negative",
                             "bottom_fraction": "bottom"}.get(out["policy"]["kind"],
                                                              out["policy"]["kind"])
    return out


def _load_data(cfg):
    """(train, val, test, flip_mask_or_None) for a resolved config."""
    d, seed = cfg["data"], cfg["seed"]
    flip = cfg.get("flip_ratio", 0.0)
    if d["source"] == "blobs":
        task = blob_task(seed, d["n_train"], d["n_val"], d["n_test"], d["dim"], d["num_classes"],
                         d["separation"], d["noise_std"], flip)
        test = task.test if len(task.test) else None
        return task.train, task.val, test, task.mask
    train = ds_mod.load_csv(d["train"], d["label"], d["has_header"])
    lm = ds_mod.label_map_of(train)
    val = ds_mod.load_csv(d["val"], d["label"], d["has_header"], label_map=lm)
    test = None
    if d.get("test"):
        test = ds_mod.load_csv(d["test"], d["label"], d["has_header"], label_map=lm)
    C = max(x.num_classes for x in (train, val, test) if x is not None)
    fix = lambda x: None if x is None else ds_mod.Dataset(x.X, x.y, C, label_names=x.label_names)
    train, val, test = fix(train), fix(val), fix(test)
    if d["normalize"]:
        mean, std = train.X.mean(axis=0), train.X.std(axis=0)
        train, val = train.standardized(mean, std), val.standardized(mean, std)
        test = None if test is None else test.standardized(mean, std)
    mask = None
    if flip > 0:
        train, mask = ds_mod.flip_labels(train, flip, seed)
    return train, val, test, mask


def _params(cfg):
    return ValuationParams(K=cfg["k"], T=cfg["t"], metric=cfg["metric"])


def _policy(cfg):
    p = cfg["policy"]
    return RemovalPolicy(p["kind"], p["q"], p["strict"])


def run_mislabel(cfg, threads=1):
    train, val, test, mask = _load_data(cfg)
    if mask is None:
        mask = ds_mod.flip_labels(train, 0.0, cfg["seed"])[1]
    params = _params(cfg)
    method = canonical_method(cfg["method"])
    vec = aggregate_over_validation(train, val, method, params, threads=threads)
    ana = mislabel_analysis(vec, mask)
    removed = select_removed(vec.values, _policy(cfg))
    keep = np.setdiff1d(np.arange(len(train)), removed)
    eval_set = test if test is not None else val
    results = {
        "n_train": len(train), "n_flipped": mask.count,
        "params": vec.params.as_dict(),
        "counts": ana.counts, "precision": ana.precision, "recall": ana.recall,
        "n_removed": len(removed),
        "accuracy_all": knn.accuracy(train, eval_set, params.K, params.metric),
        "accuracy_after_removal": knn.accuracy(train.subset(keep), eval_set, params.K,
                                               params.metric),
        "eval_set": "test" if test is not None else "validation",
        "set_I": ana.set_i, "set_II": ana.set_ii, "set_III": ana.set_iii,
    }
    rows = [(i, float(v), bool(mask.flipped[i])) for i, v in enumerate(vec.values)]
    return results, (["train_id", "value", "flipped"], rows)


def run_online(cfg, threads=1):
    train, val, test, mask = _load_data(cfg)
    shards = ds_mod.chunk(train, cfg["n_batches"])
    params = _params(cfg)
    method = canonical_method(cfg["method"])
    rep = online_run(shards, val, method, params, _policy(cfg), threads=threads)
    base = online_run(shards, val, method, params, None) if cfg["baseline"] else None
    results = {"run": rep.as_dict(), "baseline_accuracy": base.accuracies if base else None}
    rows = []
    for i, b in enumerate(rep.batches):
        rows.append((b.batch, b.accuracy, b.survivors, b.removed,
                     base.accuracies[i] if base else None))
    return results, (["batch", "accuracy", "survivors", "removed", "baseline_accuracy"], rows)


def run_active(cfg, threads=1):
    pool, val, test, _ = _load_data(cfg)
    if test is None:
        raise ds_mod.DatasetError("active learning needs a test set (data.n_test or data.test)")
    n0 = cfg["initial_labeled"]
    if n0 > len(pool):
        raise ds_mod.DatasetError(f"initial_labeled={n0} exceeds the pool of {len(pool)}")
    initial = np.sort(np.random.default_rng(cfg["seed"]).permutation(len(pool))[:n0])
    r = cfg["regressor"]
    reg = RegressorConfig(hidden=r["hidden"], lr=r["lr"], epochs=r["epochs"], seed=cfg["seed"])
    params = _params(cfg)
    method = canonical_method(cfg["method"])
    runs, rows = {}, []
    for s in cfg["strategies"]:
        rep = active_learning_run(pool, initial, val, test, s, cfg["rounds"], cfg["batch_size"],
                                  method, params, seed=cfg["seed"], regressor=reg,
                                  threads=threads)
        runs[s] = rep.as_dict()
        for rnd, (n, acc) in enumerate(zip(rep.labeled_sizes, rep.accuracies)):
            rows.append((s, rnd, n, acc))
    return {"initial_labeled": initial, "runs": runs}, (["strategy", "round", "labeled", "accuracy"], rows)


RUNNERS = {"mislabel": run_mislabel, "online": run_online, "active": run_active}
