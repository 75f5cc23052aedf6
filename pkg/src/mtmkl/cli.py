"""Command-line interface: train, predict, cv, inspect.

Exit codes: 0 ok, 2 config error, 3 data error, 4 solver failure.
Set MTMKL_LOG=debug|info|warning for verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .data import SplitSpec, TaskData, load_dataset, make_tasks, scale_unit_interval, split
from .epf import SolverConfig
from .kernels import KernelSpec
from .learners import LearnerKind, SolverError
from .model import TrainedModel, evaluate, load as load_model, save as save_model
from .theta import FeasibleRegion
from .train import train_model

log = logging.getLogger("mtmkl")

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


def _read_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


def _build_specs(cfg: dict) -> list[KernelSpec]:
    kernels = cfg.get("kernels")
    if not kernels:
        raise ConfigError("config needs at least one [[kernels]] entry")
    specs = []
    for k in kernels:
        try:
            specs.append(KernelSpec(**k))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad kernel spec {k}: {exc}") from exc
    return specs


def _build_learner(cfg: dict) -> LearnerKind:
    try:
        return LearnerKind(**cfg.get("learner", {"kind": "svm"}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad learner section: {exc}") from exc


def _build_region(cfg: dict) -> FeasibleRegion:
    try:
        return FeasibleRegion(**cfg.get("region", {"variant": "pscs"}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad region section: {exc}") from exc


def _build_solver(cfg: dict, seed=None) -> SolverConfig:
    kw = dict(cfg.get("solver", {}))
    if seed is not None:
        kw["seed"] = seed
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver section: {exc}") from exc


def _load_tasks(cfg: dict):
    ds = cfg.get("dataset")
    if not ds or "path" not in ds:
        raise ConfigError("config needs [dataset] with a path")
    try:
        X, y = load_dataset(ds["path"], ds.get("format", "csv"),
                            label_column=ds.get("label_column", -1))
    except FileNotFoundError as exc:
        raise DataError(f"dataset not found: {ds['path']}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    bounds = None
    if ds.get("scale", True):
        X, bounds = scale_unit_interval(X)
    try:
        tasks = make_tasks(X, y, ds.get("scheme", "one_vs_all"))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return tasks, ds.get("scheme", "one_vs_all"), bounds


def _split_spec(cfg: dict) -> SplitSpec:
    sp = cfg.get("split", {"train_fraction": 1.0, "val_fraction": 0.0, "test_fraction": 0.0})
    try:
        return SplitSpec(**sp)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad split section: {exc}") from exc


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _default_metric(scheme: str) -> str:
    return "multiclass_argmax_accuracy" if scheme == "one_vs_all" else "per_task_accuracy_mean"


def cmd_train(args) -> int:
    cfg = _read_config(args.config)
    specs = _build_specs(cfg)
    kind = _build_learner(cfg)
    region = _build_region(cfg)
    solver = _build_solver(cfg, seed=args.seed)
    tasks, scheme, _ = _load_tasks(cfg)
    spec = _split_spec(cfg)
    train_tasks, _, _ = split(tasks, spec) if spec.train_fraction < 1.0 else (tasks, [], [])

    out = cfg.get("output", {})
    trace_path = args.trace or out.get("trace")
    try:
        model, result = train_model(train_tasks, specs, kind, region, solver,
                                    trace_path=trace_path)
    except SolverError as exc:
        print(f"solver-error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    model.metadata["config_hash"] = _config_hash(cfg)

    model_path = out.get("model", "model.json")
    save_model(model, model_path)
    report = evaluate(model, train_tasks, _default_metric(scheme))
    if not args.quiet:
        print(f"final penalty: {result.final_penalty:.6f}")
        print(f"iterations: {result.iterations} (converged={result.converged})")
        for name, acc in report["per_task_accuracy"].items():
            print(f"train accuracy [{name}]: {acc:.2f}")
        print(f"model written to {model_path}")
    if out.get("report"):
        with open(out["report"], "w") as fh:
            json.dump({"penalty": result.final_penalty, "iterations": result.iterations,
                       "converged": result.converged, **report}, fh, indent=1)
    return 0


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except (FileNotFoundError, ValueError) as exc:
        print(f"data-error: {exc}", file=sys.stderr)
        return EXIT_DATA
    cfg = _read_config(args.config)
    tasks, _, _ = _load_tasks(cfg)
    out_path = args.output or "predictions.csv"
    with open(out_path, "w") as fh:
        fh.write("sample,task,score,label\n")
        for t, task in enumerate(tasks[:model.n_tasks]):
            scores = model.decision_values(t, task.features)
            for i, s in enumerate(scores):
                fh.write(f"{i},{model.tasks[t].task_name},{s!r},{1 if s >= 0 else -1}\n")
    if not args.quiet:
        print(f"predictions written to {out_path}")
    return 0


def _cv_point(payload):
    (cfg, C, q, seed) = payload
    specs = _build_specs(cfg)
    kind = _build_learner(cfg)
    kind = LearnerKind(**{**{k: v for k, v in vars(kind).items() if v is not None},
                          "C": C})
    region = _build_region(cfg)
    region = FeasibleRegion(**{**vars(region), "q": q})
    solver = _build_solver(cfg, seed=seed)
    tasks, scheme, _ = _load_tasks(cfg)
    train_tasks, val_tasks, _ = split(tasks, _split_spec(cfg))
    model, _ = train_model(train_tasks, specs, kind, region, solver)
    metric = cfg.get("cv", {}).get("metric") or _default_metric(scheme)
    report = evaluate(model, val_tasks, metric)
    return C, q, report[metric]


def cmd_cv(args) -> int:
    cfg = _read_config(args.config)
    cv = cfg.get("cv")
    if not cv or not cv.get("C") or not cv.get("q"):
        raise ConfigError("cv requires nonempty [cv] C and q grids")
    spec = _split_spec(cfg)
    if spec.val_fraction <= 0:
        raise ConfigError("cv requires val_fraction > 0")
    grid = [(cfg, float(C), float(q), args.seed) for C in cv["C"] for q in cv["q"]]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_cv_point, grid))
    else:
        rows = [_cv_point(g) for g in grid]

    out = cfg.get("output", {})
    grid_path = out.get("grid", "cv_grid.csv")
    with open(grid_path, "w") as fh:
        fh.write("C,q,val_metric\n")
        for C, q, acc in rows:
            fh.write(f"{C!r},{q!r},{acc!r}\n")

    # ties break toward the smaller C, then the smaller q
    best = max(rows, key=lambda r: (r[2], -r[0], -r[1]))
    C_best, q_best, val_best = best
    if not args.quiet:
        print(f"selected C={C_best:g} q={q_best:g} (val metric {val_best:.2f})")

    # retrain on train+val, report on test
    specs = _build_specs(cfg)
    kind = LearnerKind(**{**{k: v for k, v in vars(_build_learner(cfg)).items()
                             if v is not None}, "C": C_best})
    region = FeasibleRegion(**{**vars(_build_region(cfg)), "q": q_best})
    solver = _build_solver(cfg, seed=args.seed)
    tasks, scheme, _ = _load_tasks(cfg)
    train_tasks, val_tasks, test_tasks = split(tasks, spec)
    merged = [TaskData(np.vstack([a.features, b.features]),
                       None if a.labels is None else np.concatenate([a.labels, b.labels]),
                       a.task_name)
              for a, b in zip(train_tasks, val_tasks)]
    try:
        model, _ = train_model(merged, specs, kind, region, solver)
    except SolverError as exc:
        print(f"solver-error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    metric = cv.get("metric") or _default_metric(scheme)
    if test_tasks:
        report = evaluate(model, test_tasks, metric)
        if not args.quiet:
            print(f"test metric ({metric}): {report[metric]:.2f}")
    model_path = cfg.get("output", {}).get("model", "model.json")
    save_model(model, model_path)
    if not args.quiet:
        print(f"grid written to {grid_path}; model written to {model_path}")
    return 0


def cmd_inspect(args) -> int:
    try:
        model = load_model(args.model)
    except (FileNotFoundError, ValueError) as exc:
        print(f"data-error: {exc}", file=sys.stderr)
        return EXIT_DATA
    names = [s.name for s in model.kernel_specs]
    width = max(len(n) for n in names) + 2
    cols: list[tuple[str, np.ndarray]] = []
    if model.region.variant in ("cs", "pscs") and model.zeta is not None:
        cols.append(("zeta", model.zeta))
    if model.region.variant == "pscs" and model.gamma is not None:
        for t in range(model.gamma.shape[0]):
            cols.append((f"gamma^{t + 1}", model.gamma[t]))
    if model.region.variant in ("is", "lp_ball", "lplq"):
        for t in range(model.theta.shape[0]):
            cols.append((f"theta^{t + 1}", model.theta[t]))

    header = "kernel".ljust(width) + "".join(f"{name:>12}" for name, _ in cols)
    print(header)
    for m, kname in enumerate(names):
        print(kname.ljust(width) + "".join(f"{vec[m]:>12.4f}" for _, vec in cols))

    csv_path = str(args.model) + ".coeffs.csv"
    with open(csv_path, "w") as fh:
        fh.write("kernel," + ",".join(name for name, _ in cols) + "\n")
        for m, kname in enumerate(names):
            fh.write(kname + "," + ",".join(repr(float(vec[m])) for _, vec in cols) + "\n")
    print(f"coefficients written to {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtmkl",
                                 description="multi-task multiple kernel learning")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--trace", default=None, help="iteration trace CSV path")
        p.add_argument("--quiet", action="store_true")

    p_train = sub.add_parser("train", help="fit a model from a run config")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="score a dataset with a saved model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--output", default=None)
    common(p_pred)
    p_pred.set_defaults(func=cmd_predict)

    p_cv = sub.add_parser("cv", help="grid-search C and q on a validation split")
    common(p_cv)
    p_cv.set_defaults(func=cmd_cv)

    p_ins = sub.add_parser("inspect", help="print learned kernel coefficients")
    p_ins.add_argument("model")
    p_ins.add_argument("--quiet", action="store_true")
    p_ins.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MTMKL_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data-error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver-error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
