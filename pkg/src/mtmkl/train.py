"""High-level training entry: bank construction, descent, model assembly."""

from __future__ import annotations

import numpy as np

from .data import TaskData
from .epf import FitResult, SolverConfig, fit
from .kernels import KernelSpec, build_bank
from .learners import LearnerKind, _combine_task
from .model import TaskModel, TrainedModel, bias_from_duals
from .theta import FeasibleRegion

__all__ = ["train_model"]


def train_model(tasks: list[TaskData], specs: list[KernelSpec], kind: LearnerKind,
                region: FeasibleRegion, config: SolverConfig | None = None,
                trace_path=None) -> tuple[TrainedModel, FitResult]:
    """Train on the given tasks and package the result for prediction."""
    if kind.needs_labels and any(t.labels is None for t in tasks):
        raise ValueError(f"{kind.kind} requires labeled tasks")
    if kind.kind == "svm":
        for t in tasks:
            if not set(np.unique(t.labels)) <= {-1.0, 1.0}:
                raise ValueError(f"task {t.task_name!r}: svm labels must be +-1")
    bank = build_bank(specs, tasks)
    labels = [t.labels for t in tasks]
    result = fit(bank, kind, labels, region, config, trace_path=trace_path)

    task_models = []
    for t, task in enumerate(tasks):
        alpha = result.duals.alphas[t]
        K = _combine_task(bank, t, result.state.theta[t])
        b = 0.0
        thr = 0.0
        if kind.kind == "svm":
            b, _ = bias_from_duals(alpha, task.labels, K, kind.C)
        elif kind.kind == "svdd":
            thr = _sphere_threshold(alpha, K, kind.C)
        elif kind.kind == "ocsvm":
            thr = _ocsvm_threshold(alpha, K, kind.box_upper(task.n))
        task_models.append(TaskModel(task_name=task.task_name,
                                     support_features=task.features.copy(),
                                     alpha=alpha.copy(),
                                     labels=None if task.labels is None else task.labels.copy(),
                                     bias=b, threshold=thr))

    model = TrainedModel(
        kernel_specs=list(specs),
        region=region,
        learner=kind,
        theta=result.state.theta.copy(),
        tasks=task_models,
        zeta=None if result.state.zeta is None else result.state.zeta.copy(),
        gamma=None if result.state.gamma is None else result.state.gamma.copy(),
        metadata={
            "iterations": result.iterations,
            "final_penalty": result.final_penalty,
            "converged": result.converged,
            "warning": result.warning,
        },
    )
    return model, result


def _sphere_threshold(alpha, K, C):
    """Zero level of the sphere score on free (boundary) support vectors."""
    raw = 2.0 * K @ alpha - np.diag(K)
    free = (alpha > 1e-8 * C) & (alpha < C - 1e-8 * C)
    pick = free if free.any() else alpha > 1e-8 * C
    return float(np.mean(raw[pick])) if pick.any() else 0.0


def _ocsvm_threshold(alpha, K, upper):
    raw = K @ alpha
    free = (alpha > 1e-8 * upper) & (alpha < upper * (1 - 1e-8))
    pick = free if free.any() else alpha > 1e-8 * upper
    return float(np.mean(raw[pick])) if pick.any() else 0.0
