"""Command-line front end: ``ratecode <task> [options]``.

Every task builds a config dict (task defaults, then ``--config`` JSON,
then explicit flags), runs it through :func:`run` and writes a JSON report
to ``--output`` or stdout. Failures print a JSON error object to stderr and
exit with status 2.
"""
import argparse
import json
import sys
import time

import numpy as np

from . import __version__, datagen, io, mcr2, micl, segmentation
from .errors import InvalidInput, RatecodeError

TASKS = ("gen", "segment", "select-eps", "classify", "classify-kernel", "mcr2-eval", "mcr2-train")

DEFAULTS = {
    "gen": {"preset": "two-blobs", "spec": None, "m": 200, "seed": 0, "outliers": 0.0, "outlier_bound": 15.0,
            "dim": 8, "classes": 2, "sub_dim": 3, "data_out": None, "labels_out": None},
    "segment": {"input": None, "header": False, "epsilon": None, "method": "greedy", "labels_out": None},
    "select-eps": {"input": None, "header": False, "eps_grid": None, "plot_data": None, "labels_out": None},
    "classify": {"input": None, "labels": None, "test": None, "test_labels": None, "header": False,
                 "epsilon": None, "priors": "empirical", "labels_out": None},
    "classify-kernel": {"input": None, "labels": None, "test": None, "test_labels": None, "header": False,
                        "epsilon": None, "kernel": "linear", "priors": "empirical", "labels_out": None},
    "mcr2-eval": {"input": None, "labels": None, "header": False, "epsilon": 0.5, "norm": "sphere"},
    "mcr2-train": {"input": None, "labels": None, "header": False, "epsilon": 0.5, "norm": "sphere",
                   "steps": 300, "step_size": 0.5, "seed": 0, "dim": 8, "classes": 2, "sub_dim": 3, "m": 200,
                   "features_out": None, "plot_data": None},
}

REQUIRED = {
    "segment": ("input", "epsilon"),
    "select-eps": ("input", "eps_grid"),
    "classify": ("input", "labels", "test", "epsilon"),
    "classify-kernel": ("input", "labels", "test", "epsilon"),
    "mcr2-eval": ("input", "labels"),
}


def parse_grid(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InvalidInput(f"bad --eps-grid {text!r}; expected comma-separated numbers") from None


def _check(config):
    task = config["task"]
    missing = [k for k in REQUIRED.get(task, ()) if config.get(k) is None]
    if missing:
        raise InvalidInput(f"task {task} needs: " + ", ".join("--" + k.replace("_", "-") for k in missing))
    if config.get("epsilon") is not None and not float(config["epsilon"]) > 0:
        raise InvalidInput(f"epsilon must be positive, got {config['epsilon']}")


def _load(config, key):
    return io.load_matrix(config[key], header=config.get("header", False))


def _run_gen(c):
    if c["preset"] == "two-rings" and c["spec"] is None:
        X, y = datagen.two_rings(int(c["m"]) // 2, seed=c["seed"])
    elif c["preset"] == "subspaces" and c["spec"] is None:
        X, y = datagen.subspace_features(c["dim"], c["classes"], c["sub_dim"], c["m"], seed=c["seed"])
    else:
        spec = datagen.spec_from_dict(io.load_config(c["spec"])) if c["spec"] else datagen.preset(c["preset"])
        X, y = datagen.sample_mixture(spec, c["m"], seed=c["seed"])
    results = {"n": X.shape[0], "m": X.shape[1], "class_counts": np.bincount(y).tolist()}
    if c["outliers"] > 0:
        X, mask = datagen.add_outliers(X, c["outliers"], c["outlier_bound"], seed=c["seed"] + 1)
        y = np.where(mask, -1, y)
        results["outlier_count"] = int(mask.sum())
    if c["data_out"]:
        io.save_matrix(c["data_out"], X)
    if c["labels_out"]:
        io.save_labels(c["labels_out"], y)
    results["checksum"] = float(np.sum(X))
    return results, {}


def _partition_results(res):
    return {
        "n_groups": res.n_groups,
        "total_length": res.total_length,
        "epsilon": res.epsilon,
        "labels": res.labels().tolist(),
        "groups": [list(g) for g in res.partition.groups],
        "merge_trace": [list(t) for t in res.merge_trace],
    }


def _run_segment(c):
    W = _load(c, "input")
    if c["method"] == "greedy":
        res = segmentation.segment_greedy(W, c["epsilon"])
    elif c["method"] == "bruteforce":
        res = segmentation.segment_bruteforce(W, c["epsilon"])
    else:
        raise InvalidInput(f"unknown method {c['method']!r}; choose greedy or bruteforce")
    if c["labels_out"]:
        io.save_labels(c["labels_out"], res.labels())
    return _partition_results(res), {}


def _run_select(c):
    W = _load(c, "input")
    sel = segmentation.select_distortion(W, parse_grid(c["eps_grid"]))
    best = sel.results[int(np.flatnonzero(np.asarray(sel.grid) == sel.eps_star)[0])]
    if c["plot_data"]:
        io.save_curve(c["plot_data"], sel.grid, sel.objectives, ("epsilon", "objective"))
    if c["labels_out"]:
        io.save_labels(c["labels_out"], best.labels())
    curve = [{"epsilon": e, "objective": o, "n_groups": r.n_groups, "total_length": r.total_length}
             for e, o, r in zip(sel.grid, sel.objectives, sel.results)]
    return {"eps_star": sel.eps_star, "curve": curve, "best": _partition_results(best)}, {}


def _run_classify(c, kernel=None):
    X = _load(c, "input")
    y = io.load_labels(c["labels"])
    T = _load(c, "test")
    state = micl.ClassifierState.from_labeled(X, y, c["epsilon"], priors=c["priors"])
    labels, deltas = micl.classify_batch(T, state, kernel=kernel)
    results = {"class_labels": list(state.labels), "predicted": labels.tolist(), "delta_L": deltas.tolist()}
    checks = {}
    if kernel is not None:
        results["kernel"] = str(kernel)
    if c.get("test_labels"):
        truth = io.load_labels(c["test_labels"])
        if truth.shape[0] != labels.shape[0]:
            raise InvalidInput(f"{truth.shape[0]} test labels for {labels.shape[0]} test samples")
        results["accuracy"] = float(np.mean(truth == labels))
    if c["labels_out"]:
        io.save_labels(c["labels_out"], labels)
    return results, checks


def _mcr2_checks(Z, y, eps):
    d, m = Z.shape
    counts = np.bincount(y)
    counts = counts[counts > 0]
    dims = [max(1, mcr2.numerical_rank(Z[:, y == j])) for j in np.unique(y)]
    return {"d": d, "m": m, "class_dims": dims, "precision_condition": mcr2.precision_condition(eps, d, counts, dims)}


def _run_mcr2_eval(c):
    Z = _load(c, "input")
    y = io.load_labels(c["labels"])
    pi = mcr2.membership_from_labels(y)
    if c["norm"] != "none" and not mcr2.is_normalized(Z, pi, c["norm"]):
        Z = mcr2.normalize(Z, pi, c["norm"])
    report = mcr2.delta_R(Z, pi, c["epsilon"], normalization_mode=c["norm"])
    results = report.as_dict()
    results["ole"] = mcr2.ole_loss(Z, pi)
    results["metrics"] = mcr2.subspace_metrics(Z, y)
    return results, _mcr2_checks(Z, y, c["epsilon"])


def _run_mcr2_train(c):
    if c["input"]:
        if c["labels"] is None:
            raise InvalidInput("--labels is required with --input")
        Z = _load(c, "input")
        y = io.load_labels(c["labels"])
    else:
        Z, y = datagen.subspace_features(c["dim"], c["classes"], c["sub_dim"], c["m"], seed=c["seed"])
    pi = mcr2.membership_from_labels(y)
    if not mcr2.is_normalized(Z, pi, c["norm"]):
        Z = mcr2.normalize(Z, pi, c["norm"])
    Zs, traj = mcr2.optimize_features(Z, pi, c["epsilon"], steps=c["steps"], step_size=c["step_size"], norm=c["norm"])
    if c["features_out"]:
        io.save_matrix(c["features_out"], Zs)
    if c["plot_data"]:
        io.save_curve(c["plot_data"], np.arange(traj.size), traj, ("step", "deltaR"))
    final = mcr2.delta_R(Zs, pi, c["epsilon"], normalization_mode=c["norm"])
    metrics = mcr2.subspace_metrics(Zs, y)
    results = {"trajectory": traj.tolist(), "final": final.as_dict(), "metrics": metrics}
    checks = _mcr2_checks(Zs, y, c["epsilon"])
    checks["trajectory_non_decreasing"] = bool(np.all(np.diff(traj) >= 0))
    checks["orthogonality_metric"] = metrics["coherence"]
    return results, checks


def run(config):
    """Execute one task described by ``config`` and return the report dict."""
    task = config.get("task")
    if task not in TASKS:
        raise InvalidInput(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
    c = dict(DEFAULTS[task])
    c.update({k: v for k, v in config.items() if v is not None})
    _check(c)
    start = time.perf_counter()
    if task == "gen":
        results, checks = _run_gen(c)
    elif task == "segment":
        results, checks = _run_segment(c)
    elif task == "select-eps":
        results, checks = _run_select(c)
    elif task == "classify":
        results, checks = _run_classify(c)
    elif task == "classify-kernel":
        results, checks = _run_classify(c, micl.KernelSpec.parse(c["kernel"]))
    elif task == "mcr2-eval":
        results, checks = _run_mcr2_eval(c)
    else:
        results, checks = _run_mcr2_train(c)
    return {
        "schema_version": io.SCHEMA_VERSION,
        "version": __version__,
        "task": task,
        "config": c,
        "results": results,
        "checks": checks,
        "timings": {"run_seconds": time.perf_counter() - start},
    }


def _add_common(p, *names):
    opts = {
        "input": (("--input",), {"help": "CSV, one sample per row"}),
        "labels": (("--labels",), {"help": "training labels, one integer per line"}),
        "test": (("--test",), {"help": "CSV of test samples"}),
        "test_labels": (("--test-labels",), {"help": "optional ground truth for accuracy"}),
        "header": (("--header",), {"action": "store_true", "default": None, "help": "CSV files have a header row"}),
        "epsilon": (("--epsilon",), {"type": float}),
        "seed": (("--seed",), {"type": int}),
        "labels_out": (("--labels-out",), {"help": "write resulting labels here"}),
        "plot_data": (("--plot-data",), {"help": "write an x,y curve here"}),
        "m": (("--m",), {"type": int, "help": "sample count"}),
        "dim": (("--dim",), {"type": int}),
        "classes": (("--classes",), {"type": int}),
        "sub_dim": (("--sub-dim",), {"type": int}),
        "norm": (("--norm",), {"choices": ["sphere", "frobenius", "none"]}),
        "priors": (("--priors",), {"choices": ["empirical", "uniform"]}),
    }
    for name in names:
        flags, kw = opts[name]
        p.add_argument(*flags, dest=name, **kw)


def build_parser():
    parser = argparse.ArgumentParser(prog="ratecode", description="Lossy coding length tools.")
    parser.add_argument("--version", action="version", version=f"ratecode {__version__}")
    sub = parser.add_subparsers(dest="task", required=True)

    def task(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file of option values (flags override it)")
        p.add_argument("--output", help="report path (default: stdout)")
        return p

    p = task("gen", "draw a synthetic data set")
    p.add_argument("--preset", choices=sorted(datagen.PRESETS) + ["two-rings", "subspaces"])
    p.add_argument("--spec", help="JSON mixture spec (overrides --preset)")
    p.add_argument("--outliers", type=float, help="fraction of samples replaced by uniform noise")
    p.add_argument("--outlier-bound", dest="outlier_bound", type=float)
    p.add_argument("--data-out", dest="data_out")
    _add_common(p, "seed", "m", "dim", "classes", "sub_dim", "labels_out")

    p = task("segment", "cluster by minimizing the segmented coding length")
    p.add_argument("--method", choices=["greedy", "bruteforce"])
    _add_common(p, "input", "header", "epsilon", "labels_out")

    p = task("select-eps", "pick the distortion on a grid")
    p.add_argument("--eps-grid", dest="eps_grid", help="comma-separated distortions, e.g. 0.02,0.05,0.1")
    _add_common(p, "input", "header", "plot_data", "labels_out")

    for name, help_text in (("classify", "minimum incremental coding length classifier"),
                            ("classify-kernel", "kernelized classifier")):
        p = task(name, help_text)
        if name == "classify-kernel":
            p.add_argument("--kernel", help="linear | poly:D | rbf:GAMMA")
        _add_common(p, "input", "labels", "test", "test_labels", "header", "epsilon", "priors", "labels_out")

    p = task("mcr2-eval", "rate reduction of a labeled feature set")
    _add_common(p, "input", "labels", "header", "epsilon", "norm")

    p = task("mcr2-train", "maximize the rate reduction of features directly")
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--features-out", dest="features_out")
    _add_common(p, "input", "labels", "header", "epsilon", "norm", "seed", "m", "dim", "classes", "sub_dim",
                "plot_data")
    return parser


def config_from_args(args):
    """Merge the ``--config`` file with explicit flags (flags win)."""
    values = vars(args).copy()
    config_path = values.pop("config", None)
    values.pop("output", None)
    config = {}
    if config_path:
        config = io.load_config(config_path)
        if config.get("task", args.task) != args.task:
            raise InvalidInput(f"config is for task {config['task']!r}, not {args.task!r}")
    config.update({k: v for k, v in values.items() if v is not None})
    config["task"] = args.task
    return config


def error_object(exc):
    err = {"type": type(exc).__name__, "message": str(exc)}
    for key in ("row", "column"):
        if getattr(exc, key, None) is not None:
            err[key] = getattr(exc, key)
    return {"schema_version": io.SCHEMA_VERSION, "error": err}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report = run(config_from_args(args))
        text = io.write_report(report, args.output)
    except (RatecodeError, OSError) as exc:
        sys.stderr.write(json.dumps(error_object(exc)) + "\n")
        return 2
    if args.output is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
