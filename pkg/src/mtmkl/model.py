"""Trained-model container: prediction, bias recovery, metrics, persistence."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, gram_matrix
from .learners import LearnerKind
from .theta import FeasibleRegion

__all__ = ["TrainedModel", "TaskModel", "bias_from_duals", "evaluate", "save", "load"]

FORMAT_VERSION = 1


@dataclass
class TaskModel:
    """Everything needed to score new points for one task."""

    task_name: str
    support_features: np.ndarray
    alpha: np.ndarray
    labels: np.ndarray | None
    bias: float = 0.0
    threshold: float = 0.0  # svdd/ocsvm score offset


@dataclass
class TrainedModel:
    kernel_specs: list[KernelSpec]
    region: FeasibleRegion
    learner: LearnerKind
    theta: np.ndarray  # T x M
    tasks: list[TaskModel]
    zeta: np.ndarray | None = None
    gamma: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def combined_cross_gram(self, task: int, X: np.ndarray) -> np.ndarray:
        """|X| x N_t cross-Gram under task `task`'s learned kernel mix."""
        tm = self.tasks[task]
        if X.shape[1] != tm.support_features.shape[1]:
            raise ValueError(
                f"feature dimension {X.shape[1]} does not match training "
                f"dimension {tm.support_features.shape[1]}")
        out = np.zeros((X.shape[0], tm.support_features.shape[0]))
        for w, spec in zip(self.theta[task], self.kernel_specs):
            if w != 0.0:
                out += w * gram_matrix(spec, X, tm.support_features)
        return out

    def decision_values(self, task: int, X: np.ndarray) -> np.ndarray:
        """Dual decision scores for a batch of points on one task."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        tm = self.tasks[task]
        Kx = self.combined_cross_gram(task, X)
        kind = self.learner.kind
        if kind == "svm":
            return Kx @ (tm.alpha * tm.labels) + tm.bias
        if kind == "krr":
            return Kx @ tm.alpha
        if kind == "svdd":
            # positive = inside the learned sphere
            return 2.0 * Kx @ tm.alpha - self.combined_self(task, X) - tm.threshold
        return Kx @ tm.alpha - tm.threshold  # ocsvm

    def combined_self(self, task: int, X: np.ndarray) -> np.ndarray:
        """Combined self-similarity sum_m theta_m k_m(x, x) per row of X."""
        out = np.zeros(X.shape[0])
        for w, spec in zip(self.theta[task], self.kernel_specs):
            if w != 0.0:
                out += w * np.array([
                    1.0 if spec.normalized else gram_matrix(spec, x[None, :])[0, 0]
                    for x in X
                ])
        return out

    def decision_value(self, task: int, x: np.ndarray) -> float:
        return float(self.decision_values(task, np.atleast_2d(x))[0])

    def predict_labels(self, task: int, X: np.ndarray) -> np.ndarray:
        return np.where(self.decision_values(task, X) >= 0, 1.0, -1.0)

    def predict_multiclass(self, X: np.ndarray) -> np.ndarray:
        """argmax over OVA task scores; returns task indices."""
        scores = np.vstack([self.decision_values(t, X) for t in range(self.n_tasks)])
        return np.argmax(scores, axis=0)


def bias_from_duals(alpha: np.ndarray, labels: np.ndarray, K: np.ndarray,
                    C: float) -> tuple[float, bool]:
    """KKT bias for an SVM task: mean over free support vectors.

    Falls back to the midpoint of the KKT-feasible interval when every
    support vector sits at a bound; returns (bias, used_fallback).
    """
    sv = alpha > 1e-8 * C
    if not sv.any():
        return 0.0, True
    resid = labels - K @ (alpha * labels)
    free = sv & (alpha < C - 1e-8 * C)
    if free.any():
        return float(np.mean(resid[free])), False
    # every alpha at a bound: KKT brackets b between the positive-at-C /
    # negative-at-0 residuals (lower) and their mirror set (upper)
    at_upper = alpha >= C - 1e-8 * C
    at_lower = ~sv
    lo_set = resid[((labels > 0) & at_upper) | ((labels < 0) & at_lower)]
    hi_set = resid[((labels > 0) & at_lower) | ((labels < 0) & at_upper)]
    lo = np.max(lo_set) if lo_set.size else -np.inf
    hi = np.min(hi_set) if hi_set.size else np.inf
    if np.isfinite(lo) and np.isfinite(hi):
        return float(0.5 * (lo + hi)), True
    return float(lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)), True


def evaluate(model: TrainedModel, tasks, metric: str = "per_task_accuracy_mean") -> dict:
    """Accuracy report on labeled evaluation tasks.

    per_task_accuracy_mean scores each binary task on its own samples;
    multiclass_argmax_accuracy requires an OVA bundle (every task holds
    the same samples) and scores argmax-over-tasks class predictions.
    """
    if metric not in ("per_task_accuracy_mean", "multiclass_argmax_accuracy"):
        raise ValueError(f"unknown metric: {metric!r}")
    per_task = {}
    for t, task in enumerate(tasks):
        if task.labels is None:
            raise ValueError(f"task {task.task_name!r} has no labels to score")
        pred = model.predict_labels(t, task.features)
        per_task[task.task_name] = 100.0 * float(np.mean(pred == task.labels))
    report = {"per_task_accuracy": per_task,
              "per_task_accuracy_mean": float(np.mean(list(per_task.values())))}
    if metric == "multiclass_argmax_accuracy":
        n = tasks[0].n
        if any(task.n != n for task in tasks):
            raise ValueError("argmax metric needs an OVA bundle (shared samples)")
        X = tasks[0].features
        truth = np.full(n, -1, dtype=int)
        for t, task in enumerate(tasks):
            truth[task.labels > 0] = t
        pred = model.predict_multiclass(X)
        report["multiclass_argmax_accuracy"] = 100.0 * float(np.mean(pred == truth))
    return report


def _enc(arr: np.ndarray | None):
    if arr is None:
        return None
    a = np.ascontiguousarray(arr, dtype=np.float64)
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _dec(obj):
    if obj is None:
        return None
    a = np.frombuffer(base64.b64decode(obj["data"]), dtype=np.float64)
    return a.reshape(obj["shape"]).copy()


def save(model: TrainedModel, path) -> None:
    """Write a versioned JSON model file with bit-exact binary arrays."""
    doc = {
        "format_version": FORMAT_VERSION,
        "kernel_specs": [vars(s) for s in model.kernel_specs],
        "region": vars(model.region),
        "learner": {k: v for k, v in vars(model.learner).items() if v is not None},
        "theta": _enc(model.theta),
        "zeta": _enc(model.zeta),
        "gamma": _enc(model.gamma),
        "metadata": model.metadata,
        "tasks": [
            {
                "task_name": tm.task_name,
                "support_features": _enc(tm.support_features),
                "alpha": _enc(tm.alpha),
                "labels": _enc(tm.labels),
                "bias": tm.bias,
                "threshold": tm.threshold,
            }
            for tm in model.tasks
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load(path) -> TrainedModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: corrupt model file: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: model format version {version} unsupported "
                         f"(expected {FORMAT_VERSION})")
    tasks = [
        TaskModel(
            task_name=t["task_name"],
            support_features=_dec(t["support_features"]),
            alpha=_dec(t["alpha"]),
            labels=_dec(t["labels"]),
            bias=t["bias"],
            threshold=t["threshold"],
        )
        for t in doc["tasks"]
    ]
    return TrainedModel(
        kernel_specs=[KernelSpec(**s) for s in doc["kernel_specs"]],
        region=FeasibleRegion(**doc["region"]),
        learner=LearnerKind(**doc["learner"]),
        theta=_dec(doc["theta"]),
        tasks=tasks,
        zeta=_dec(doc["zeta"]),
        gamma=_dec(doc["gamma"]),
        metadata=doc.get("metadata", {}),
    )
