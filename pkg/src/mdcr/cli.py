"""Command line entry point: ``mdcr {synth,train,eval,query,gradcheck,reproduce}``.

Exit codes: 0 success, 1 check failure, 2 validation error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .data import (
    MatrixFormatError,
    PairedDataset,
    load_labels,
    load_matrix,
    make_synthetic,
    remap_labels,
    save_labels,
    save_matrix,
    split,
    zscore,
)
from .metrics import EvalReport, mean_ap
from .objective import Hyperparams, Task, TaskObjective, check_gradient
from .optimizer import PRESETS, Model, StopReason, TrainConfig, default_config, load_model, save_model, train
from .retrieval import cross_retrieve, write_jsonl

logger = logging.getLogger("mdcr")

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3

WIKIPEDIA_URL = "http://www.svcl.ucsd.edu/projects/crossmodal/"

# mAP values published for the public-feature Wikipedia setup
PUBLISHED_TABLE1 = {"image_query": 0.287, "text_query": 0.225, "average": 0.256}
PUBLISHED_TABLE2 = {
    ("i2t", "i2t"): 0.287, ("i2t", "t2i"): 0.146,
    ("t2i", "i2t"): 0.165, ("t2i", "t2i"): 0.225,
    ("unified", "i2t"): 0.236, ("unified", "t2i"): 0.216,
}
DATASET_FILES = ("train_images", "train_texts", "train_labels", "test_images", "test_texts", "test_labels")


class UsageError(Exception):
    """Invalid input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_file(path: Optional[str], flag: str) -> Path:
    if not path:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: file not found: {p}")
    return p


def _load_features(path: Path, flag: str) -> np.ndarray:
    try:
        return load_matrix(path)
    except (MatrixFormatError, OSError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _load_label_file(path: Path, flag: str) -> np.ndarray:
    try:
        return load_labels(path)
    except (MatrixFormatError, OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _manifest(args, command: str, datasets: Dict[str, Path], extra: Optional[dict] = None) -> dict:
    m = {
        "tool": "mdcr",
        "version": __version__,
        "command": command,
        "argv": list(getattr(args, "_argv", [])),
        "config_path": getattr(args, "config", None),
        "datasets": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in datasets.items()},
        "task": getattr(args, "task", None),
        "seed": getattr(args, "seed", None),
        "output_dir": str(args.out),
    }
    if extra:
        m.update(extra)
    return m


def _resolve_config(args, task: Task) -> Tuple[TrainConfig, List[str]]:
    """Preset, then --config file, then explicit flags; overrides are reported."""
    base = default_config(task, args.preset)
    hp = {"lam": base.hp.lam, "eta1": base.hp.eta1, "eta2": base.hp.eta2}
    rest = {"mu": base.mu, "epsilon": base.epsilon}
    warnings = []
    overrides = {}
    if args.config:
        try:
            overrides.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from None
    for key in ("lambda", "eta1", "eta2", "mu", "epsilon"):
        val = getattr(args, key.replace("lambda", "lam"), None)
        if val is not None:
            overrides[key] = val
    for key, val in overrides.items():
        target = "lam" if key == "lambda" else key
        if target in hp:
            old = hp[target]
            hp[target] = float(val)
        elif target in rest:
            old = rest[target]
            rest[target] = float(val)
        else:
            raise UsageError(f"unknown configuration key {key!r}")
        if args.preset != "custom" and float(val) != old:
            warnings.append(f"{key}={val} overrides preset {args.preset} value {old}")
    try:
        cfg = TrainConfig(
            hp=Hyperparams(**hp),
            max_outer_iter=args.max_outer,
            max_inner_iter=args.max_inner,
            init=args.init,
            seed=args.seed,
            outer_tol=args.outer_tol,
            step_halving=args.step_halving,
            **rest,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg, warnings


def _train_and_save(data: PairedDataset, task: Task, cfg: TrainConfig, out: Path, classes, stats) -> dict:
    report = train(data, task, cfg)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "trace.csv", report.trace_csv())
    summary = report.summary()
    summary["config"] = cfg.to_dict()
    _write_json(out / "train_report.json", summary)
    if report.stop_reason is not StopReason.STEP_REJECTED:
        model = Model(report.pair, cfg, stats[0], stats[1], classes)
        save_model(out / "model.mdcr", model)
    return summary


def _evaluate(model: Model, X, T, labels, direction: Task, top_k=None, points=11) -> EvalReport:
    if model.image_stats is not None:
        X, _ = zscore(X, model.image_stats)
    if model.text_stats is not None:
        T, _ = zscore(T, model.text_stats)
    if direction is Task.I2T:
        results = cross_retrieve(model.pair, X, labels, T, labels, direction)
    else:
        results = cross_retrieve(model.pair, T, labels, X, labels, direction)
    return mean_ap(results, points=points, k=top_k)


def _map_labels(model: Model, raw: np.ndarray, flag: str) -> np.ndarray:
    if model.classes is None:
        return raw
    lookup = {c: i for i, c in enumerate(model.classes)}
    try:
        return np.asarray([lookup[v.item()] for v in raw], dtype=np.int64)
    except KeyError as exc:
        raise UsageError(f"{flag}: label {exc.args[0]} was not seen during training") from None


def _check_dims(model: Model, X, T):
    c, p = model.pair.V.shape
    q = model.pair.W.shape[1]
    if X.shape[1] != p:
        raise UsageError(f"--images has {X.shape[1]} columns, model expects {p}")
    if T.shape[1] != q:
        raise UsageError(f"--texts has {T.shape[1]} columns, model expects {q}")
    if X.shape[0] != T.shape[0]:
        raise UsageError(f"--images has {X.shape[0]} rows but --texts has {T.shape[0]}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        ds = make_synthetic(args.classes, args.per_class, args.p, args.q, args.sep, args.noise, args.seed)
        tr, te = split(ds, args.train_fraction, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".txt" if args.format == "text" else ".bin"
    for prefix, part in (("train", tr), ("test", te)):
        save_matrix(out / f"{prefix}_images{ext}", part.images)
        save_matrix(out / f"{prefix}_texts{ext}", part.texts)
        save_labels(out / f"{prefix}_labels.txt", part.labels)
    _write_json(out / "manifest.json", _manifest(args, "synth", {}, {
        "synthetic": {k: getattr(args, k) for k in ("classes", "per_class", "p", "q", "sep", "noise", "train_fraction")},
    }))
    print(f"wrote {tr.n_samples} train / {te.n_samples} test pairs to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    task = Task.parse(args.task)
    paths = {
        "images": _require_file(args.images, "--images"),
        "texts": _require_file(args.texts, "--texts"),
        "labels": _require_file(args.labels, "--labels"),
    }
    cfg, warnings = _resolve_config(args, task)
    X = _load_features(paths["images"], "--images")
    T = _load_features(paths["texts"], "--texts")
    raw = _load_label_file(paths["labels"], "--labels")
    if not (X.shape[0] == T.shape[0] == raw.shape[0]):
        raise UsageError(f"row counts differ: --images {X.shape[0]}, --texts {T.shape[0]}, --labels {raw.shape[0]}")
    ids, classes = remap_labels(raw)
    stats = (None, None)
    if args.zscore:
        X, img_stats = zscore(X)
        T, txt_stats = zscore(T)
        stats = (img_stats, txt_stats)
    data = PairedDataset(X, T, ids, len(classes))
    out = Path(args.out)
    for w in warnings:
        logger.warning(w)
    summary = _train_and_save(data, task, cfg, out, [int(c) for c in classes], stats)
    _write_json(out / "manifest.json", _manifest(args, "train", paths, {
        "preset": args.preset,
        "resolved_config": cfg.to_dict(),
        "zscore": bool(args.zscore),
        "warnings": warnings,
    }))
    print(json.dumps({k: summary[k] for k in ("task", "stop_reason", "outer_iters", "final_objective")}))
    if summary["stop_reason"] == StopReason.STEP_REJECTED.value:
        print(f"error: training diverged: {summary['message']} (try --step-halving or a smaller --mu)",
              file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _load_eval_inputs(args):
    paths = {
        "model": _require_file(args.model, "--model"),
        "images": _require_file(args.images, "--images"),
        "texts": _require_file(args.texts, "--texts"),
        "labels": _require_file(args.labels, "--labels"),
    }
    try:
        model = load_model(paths["model"])
    except (ValueError, OSError, KeyError) as exc:
        raise UsageError(f"--model: {exc}") from None
    X = _load_features(paths["images"], "--images")
    T = _load_features(paths["texts"], "--texts")
    labels = _map_labels(model, _load_label_file(paths["labels"], "--labels"), "--labels")
    _check_dims(model, X, T)
    if labels.shape[0] != X.shape[0]:
        raise UsageError(f"--labels has {labels.shape[0]} entries, features have {X.shape[0]} rows")
    return paths, model, X, T, labels


def cmd_eval(args) -> int:
    paths, model, X, T, labels = _load_eval_inputs(args)
    directions = [Task.parse(args.direction)] if args.direction else (
        [Task.I2T, Task.T2I] if model.task is Task.UNIFIED else [model.task])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for d in directions:
        rep = _evaluate(model, X, T, labels, d, args.top_k, args.pr_points)
        rep.extra = {"direction": d.value, "modelTask": model.task.value,
                     "crossTask": model.task not in (Task.UNIFIED, d)}
        suffix = "" if len(directions) == 1 else f"_{d.value}"
        _write_text(out / f"eval{suffix}.json", rep.to_json() + "\n")
        _write_text(out / f"pr{suffix}.csv", rep.pr_csv())
        summary[d.value] = rep.mAP
    _write_json(out / "manifest.json", _manifest(args, "eval", paths, {"directions": list(summary)}))
    for d, v in summary.items():
        print(f"{d} mAP = {v:.3f}")
    return EXIT_OK


def cmd_query(args) -> int:
    paths, model, X, T, labels = _load_eval_inputs(args)
    d = Task.parse(args.direction or ("i2t" if model.task is Task.UNIFIED else model.task.value))
    if model.image_stats is not None:
        X, _ = zscore(X, model.image_stats)
    if model.text_stats is not None:
        T, _ = zscore(T, model.text_stats)
    q, g = (X, T) if d is Task.I2T else (T, X)
    results = cross_retrieve(model.pair, q, labels, g, labels, d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        write_jsonl(results, fh)
    _write_json(out / "manifest.json", _manifest(args, "query", paths, {"direction": d.value}))
    print(f"wrote {len(results)} rankings to {out / 'results.jsonl'}")
    return EXIT_OK


def run_gradcheck(n=20, p=7, q=5, c=3, points=20, seed=0, lambdas=None, eta1=None, eta2=None, h=1e-6):
    """Worst finite-difference mismatch over random instances, tasks and points.

    Returns ``(worst_error, description)``.
    """
    rng = np.random.default_rng(seed)
    worst, where = -1.0, ""
    for k in range(points):
        X = rng.uniform(-1, 1, (n, p))
        T = rng.uniform(-1, 1, (n, q))
        labels = np.arange(n) % c
        S = np.eye(c)[labels]
        lam_list = lambdas if lambdas is not None else [float(rng.uniform(0, 1))]
        e1 = float(rng.uniform(0, 1)) if eta1 is None else eta1
        e2 = float(rng.uniform(0, 1)) if eta2 is None else eta2
        V = rng.uniform(-1, 1, (c, p))
        W = rng.uniform(-1, 1, (c, q))
        for lam in lam_list:
            for task in Task:
                obj = TaskObjective(X, T, S, task, Hyperparams(lam, e1, e2))
                res = check_gradient(obj, V, W, h)
                if res.max_rel_error > worst:
                    worst = res.max_rel_error
                    where = (f"point {k}, task {task.value}, lambda {lam:.3g}, block {res.block}{list(res.index)}: "
                             f"analytic {res.analytic:.12g}, numeric {res.numeric:.12g}")
    return worst, where


def cmd_gradcheck(args) -> int:
    lambdas = [float(v) for v in args.lambdas.split(",")] if args.lambdas else None
    worst, where = run_gradcheck(args.n, args.p, args.q, args.c, args.points, args.seed,
                                 lambdas, args.eta1, args.eta2, args.step)
    ok = worst <= args.tolerance
    print(f"{'PASS' if ok else 'FAIL'}: max relative error {worst:.3e} (tolerance {args.tolerance:g})")
    if not ok:
        print(f"worst coordinate: {where}")
    return EXIT_OK if ok else EXIT_CHECK


def _find_dataset(root: Path) -> Dict[str, Path]:
    found, missing = {}, []
    for name in DATASET_FILES:
        cands = [root / f"{name}{ext}" for ext in ((".txt",) if name.endswith("labels") else (".bin", ".txt"))]
        hit = next((c for c in cands if c.is_file()), None)
        if hit is None:
            missing.append(name)
        else:
            found[name] = hit
    if missing:
        raise UsageError(
            f"dataset directory {root} is missing: {', '.join(missing)}.\n"
            f"Download the public Wikipedia features (128-d SIFT BoVW images, 10-d LDA texts, "
            f"2173/693 split) from {WIKIPEDIA_URL}, convert them with mdcr's text or binary matrix "
            f"format, and place train_images, train_texts, train_labels.txt, test_images, "
            f"test_texts, test_labels.txt in the directory (or point MDCR_DATA_DIR at it)."
        )
    return found


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.3f}"


def cmd_reproduce(args) -> int:
    out = Path(args.out)
    if args.synthetic:
        return _reproduce_synthetic(args, out)
    root = args.data_dir or os.environ.get("MDCR_DATA_DIR")
    if not root:
        raise UsageError(f"no dataset directory: pass --data-dir or set MDCR_DATA_DIR "
                         f"(public Wikipedia features: {WIKIPEDIA_URL})")
    paths = _find_dataset(Path(root))
    Xtr = _load_features(paths["train_images"], "train_images")
    Ttr = _load_features(paths["train_texts"], "train_texts")
    ytr_raw = _load_label_file(paths["train_labels"], "train_labels")
    Xte = _load_features(paths["test_images"], "test_images")
    Tte = _load_features(paths["test_texts"], "test_texts")
    yte_raw = _load_label_file(paths["test_labels"], "test_labels")
    ids, classes = remap_labels(ytr_raw)
    stats = (None, None)
    if args.zscore:
        Xtr, s1 = zscore(Xtr)
        Ttr, s2 = zscore(Ttr)
        stats = (s1, s2)
    try:
        train_data = PairedDataset(Xtr, Ttr, ids, len(classes))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lookup = {c.item(): i for i, c in enumerate(classes)}
    try:
        yte = np.asarray([lookup[v.item()] for v in yte_raw], dtype=np.int64)
    except KeyError as exc:
        raise UsageError(f"test label {exc.args[0]} absent from training labels") from None

    preset = "wikipedia-public"
    tasks = [Task.I2T, Task.T2I, Task.UNIFIED]

    def job(task: Task) -> dict:
        base = default_config(task, preset)
        cfg = TrainConfig(hp=base.hp, mu=args.mu or base.mu, epsilon=base.epsilon,
                          max_outer_iter=args.max_outer, step_halving=args.step_halving)
        return _train_and_save(train_data, task, cfg, out / task.value, [int(c) for c in classes], stats)

    if args.parallel:
        with ThreadPoolExecutor(max_workers=len(tasks)) as pool:
            summaries = dict(zip(tasks, pool.map(job, tasks)))
    else:
        summaries = {t: job(t) for t in tasks}
    diverged = [t.value for t, s in summaries.items() if s["stop_reason"] == StopReason.STEP_REJECTED.value]
    if diverged:
        print(f"error: training diverged for {', '.join(diverged)}; rerun with --step-halving", file=sys.stderr)
        return EXIT_DIVERGED

    cells = {}
    for t in tasks:
        model = load_model(out / t.value / "model.mdcr")
        for d in (Task.I2T, Task.T2I):
            rep = _evaluate(model, Xte, Tte, yte, d)
            cells[(t.value, d.value)] = rep.mAP
            _write_text(out / t.value / f"eval_{d.value}.json", rep.to_json() + "\n")
            _write_text(out / t.value / f"pr_{d.value}.csv", rep.pr_csv())
    report = _comparison(args.which, cells)
    report["training"] = {t.value: s for t, s in summaries.items()}
    _write_json(out / f"{args.which}.json", report)
    _write_json(out / "manifest.json", _manifest(args, "reproduce", paths, {"preset": preset}))
    print(_render(report))
    return EXIT_OK


def _comparison(which: str, cells: Dict[tuple, Optional[float]]) -> dict:
    rows = []
    if which == "table1":
        ours_i = cells.get(("i2t", "i2t"))
        ours_t = cells.get(("t2i", "t2i"))
        ours_avg = None if ours_i is None or ours_t is None else (ours_i + ours_t) / 2
        for name, ours, key in (("Image query", ours_i, "image_query"), ("Text query", ours_t, "text_query"),
                                ("Average", ours_avg, "average")):
            rows.append({"row": name, "ours": ours, "published": PUBLISHED_TABLE1[key]})
    else:
        for (model, direction), published in PUBLISHED_TABLE2.items():
            rows.append({"row": f"{direction.upper()} using {model} model", "ours": cells.get((model, direction)),
                         "published": published})
    for r in rows:
        r["delta"] = None if r["ours"] is None or r["published"] is None else r["ours"] - r["published"]
    return {"table": which, "rows": rows}


def _render(report: dict) -> str:
    lines = [f"{report['table']}", f"{'':34s} {'ours':>7s} {'published':>9s} {'delta':>7s}"]
    for r in report["rows"]:
        lines.append(f"{r['row']:34s} {_fmt(r['ours']):>7s} {_fmt(r['published']):>9s} {_fmt(r['delta']):>7s}")
    return "\n".join(lines)


def _reproduce_synthetic(args, out: Path) -> int:
    """No benchmark data: run the gradient check and a synthetic train/eval round."""
    worst, where = run_gradcheck(seed=args.seed)
    ds = make_synthetic(4, 25, 8, 6, sep=10.0, noise=0.2, seed=args.seed)
    tr, te = split(ds, 0.7, args.seed)
    cells = {}
    summaries = {}
    for task in (Task.I2T, Task.T2I, Task.UNIFIED):
        cfg = TrainConfig(hp=Hyperparams(0.5, 0.5, 0.5), epsilon=1e-8, step_halving=True)
        summaries[task.value] = _train_and_save(tr, task, cfg, out / task.value, list(range(4)), (None, None))
        model = load_model(out / task.value / "model.mdcr")
        for d in (Task.I2T, Task.T2I):
            cells[(task.value, d.value)] = _evaluate(model, te.images, te.texts, te.labels, d).mAP
    report = _comparison(args.which, cells)
    for r in report["rows"]:
        r["published"] = None
        r["delta"] = None
    report["mode"] = "synthetic"
    report["gradcheck"] = {"max_rel_error": worst, "worst": where, "passed": worst <= 1e-5}
    report["training"] = summaries
    _write_json(out / f"{args.which}.json", report)
    _write_json(out / "manifest.json", _manifest(args, "reproduce", {}, {"mode": "synthetic"}))
    print(_render(report))
    print(f"gradcheck: max relative error {worst:.3e}")
    return EXIT_OK if worst <= 1e-5 else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=PRESETS, default="custom",
                   help="published hyperparameters for a benchmark (default: custom)")
    p.add_argument("--config", help="JSON file with lambda/eta1/eta2/mu/epsilon overrides")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--max-inner", type=int, default=500)
    p.add_argument("--outer-tol", type=float, default=1e-6)
    p.add_argument("--init", choices=("zeros", "gaussian"), default="zeros")
    p.add_argument("--step-halving", action="store_true",
                   help="halve the step size when a step would increase the objective")
    p.add_argument("--zscore", action="store_true", help="standardize features with training statistics")


def _add_eval_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--direction", choices=("i2t", "t2i"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdcr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mdcr {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic paired dataset")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=25)
    p.add_argument("--p", type=int, default=8)
    p.add_argument("--q", type=int, default=6)
    p.add_argument("--sep", type=float, default=10.0)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="learn a projection pair")
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--images")
    p.add_argument("--texts")
    p.add_argument("--labels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="mAP, per-class mAP and PR curve on a test split")
    _add_eval_inputs(p)
    p.add_argument("--top-k", type=int, help="truncate rankings (not the default protocol)")
    p.add_argument("--pr-points", type=int, default=11)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("query", help="export full rankings as JSON lines")
    _add_eval_inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--p", type=int, default=7)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--c", type=int, default=3)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--step", type=float, default=1e-6)
    p.add_argument("--lambdas", help="comma separated lambda sweep, e.g. 0,0.5,1")
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("reproduce", help="train all three models and compare with published mAP")
    p.add_argument("--data-dir", help="directory with the Wikipedia feature files (default: $MDCR_DATA_DIR)")
    p.add_argument("--which", choices=("table1", "table2"), default="table1")
    p.add_argument("--synthetic", action="store_true", help="no benchmark data: synthetic run only")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--step-halving", action="store_true")
    p.add_argument("--zscore", action="store_true")
    p.add_argument("--mu", type=float)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    args._argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
