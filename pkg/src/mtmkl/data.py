"""Dataset loading, unit-interval scaling, task construction, and splits."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "TaskData",
    "SplitSpec",
    "load_dataset",
    "scale_unit_interval",
    "make_tasks",
    "split",
]


@dataclass
class TaskData:
    """One task's samples: features N_t x D, labels +-1 (or targets, or None)."""

    features: np.ndarray
    labels: np.ndarray | None
    task_name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValueError(f"task {self.task_name!r}: need a nonempty 2-D feature matrix")
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"task {self.task_name!r}: non-finite feature values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=float)
            if self.labels.shape != (self.features.shape[0],):
                raise ValueError(f"task {self.task_name!r}: label length mismatch")

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    val_fraction: float
    test_fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        fr = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0 <= f <= 1 for f in fr):
            raise ValueError("fractions must lie in [0, 1]")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError("fractions must sum to 1")


def load_dataset(path, fmt: str = "libsvm",
                 label_column: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Read a libsvm sparse or CSV file into a dense (features, labels) pair.

    libsvm: "label idx:val idx:val ..." with 1-based indices; missing
    entries are zero and the feature count is the max index in the file.
    csv: numeric rows with the label in `label_column` (default last).
    """
    if fmt == "libsvm":
        return _load_libsvm(path)
    if fmt == "csv":
        return _load_csv(path, label_column)
    raise ValueError(f"unknown dataset format: {fmt!r}")


def _load_libsvm(path):
    labels, rows, max_idx = [], [], 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
                row = {}
                for tok in parts[1:]:
                    idx_s, val_s = tok.split(":")
                    idx = int(idx_s)
                    if idx < 1:
                        raise ValueError("indices are 1-based")
                    row[idx] = float(val_s)
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: malformed line {lineno}: {exc}") from exc
            if row:
                max_idx = max(max_idx, max(row))
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    X = np.zeros((len(rows), max_idx))
    for i, row in enumerate(rows):
        for idx, val in row.items():
            X[i, idx - 1] = val
    return X, np.array(labels)


def _load_csv(path, label_column):
    try:
        raw = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed CSV: {exc}") from exc
    if raw.size == 0:
        raise ValueError(f"{path}: empty dataset")
    labels = raw[:, label_column]
    X = np.delete(raw, label_column if label_column >= 0 else raw.shape[1] + label_column,
                  axis=1)
    return X, labels


def scale_unit_interval(features: np.ndarray,
                        fitted_bounds: tuple[np.ndarray, np.ndarray] | None = None):
    """Min-max scale each column to [0, 1]; constant columns map to 0.

    Returns (scaled, (lo, hi)).  Reusing fitted bounds on new data is an
    affine extension: values outside the training range leave [0, 1].
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need at least one row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if fitted_bounds is None:
        lo, hi = X.min(axis=0), X.max(axis=0)
    else:
        lo, hi = fitted_bounds
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = (X - lo) / safe
    scaled[:, span == 0] = 0.0
    return scaled, (lo, hi)


def make_tasks(features: np.ndarray, class_labels: np.ndarray,
               scheme: str = "one_vs_all") -> list[TaskData]:
    """Cast a multiclass problem as binary tasks (OVA or OVO)."""
    X = np.asarray(features, dtype=float)
    cls = np.asarray(class_labels)
    classes = sorted(set(cls.tolist()))
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    tasks = []
    if scheme == "one_vs_all":
        for c in classes:
            y = np.where(cls == c, 1.0, -1.0)
            tasks.append(TaskData(features=X, labels=y, task_name=f"{_fmt(c)}_vs_rest"))
    elif scheme == "one_vs_one":
        for a, b in combinations(classes, 2):
            mask = (cls == a) | (cls == b)
            y = np.where(cls[mask] == a, 1.0, -1.0)
            tasks.append(TaskData(features=X[mask], labels=y,
                                  task_name=f"{_fmt(a)}_vs_{_fmt(b)}"))
    else:
        raise ValueError(f"unknown task scheme: {scheme!r}")
    return tasks


def _fmt(c) -> str:
    if isinstance(c, float) and c.is_integer():
        return str(int(c))
    return str(c)


def split(tasks: list[TaskData], spec: SplitSpec):
    """Seed-deterministic disjoint (train, val, test) copies of each task.

    Stratified splits partition each class separately so class ratios
    survive within one sample per stratum.
    """
    rng = np.random.default_rng(spec.seed)
    out = ([], [], [])
    for task in tasks:
        n = task.n
        if spec.stratified and task.labels is not None:
            idx_parts = ([], [], [])
            for c in sorted(set(task.labels.tolist())):
                stratum = np.flatnonzero(task.labels == c)
                if stratum.size == 0:
                    raise ValueError(f"task {task.task_name!r}: empty stratum {c}")
                for part, ids in zip(idx_parts, _partition(stratum, spec, rng)):
                    part.extend(ids.tolist())
            parts = [np.sort(np.array(p, dtype=int)) for p in idx_parts]
        else:
            parts = [np.sort(p) for p in _partition(np.arange(n), spec, rng)]
        for bucket, ids in zip(out, parts):
            if ids.size:
                bucket.append(TaskData(features=task.features[ids],
                                       labels=None if task.labels is None else task.labels[ids],
                                       task_name=task.task_name))
            else:
                bucket.append(None)
    train, val, test = out
    return ([t for t in train if t is not None],
            [t for t in val if t is not None],
            [t for t in test if t is not None])


def _partition(indices: np.ndarray, spec: SplitSpec, rng) -> tuple:
    perm = rng.permutation(indices)
    n = perm.size
    n_train = int(round(spec.train_fraction * n))
    n_val = int(round(spec.val_fraction * n))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]
