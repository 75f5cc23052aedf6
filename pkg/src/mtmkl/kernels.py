"""Base kernels, normalized Gram matrices, and the per-task kernel bank."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["KernelSpec", "KernelBank", "eval_kernel", "gram_matrix", "build_bank", "combine"]

# Gaussian kernel convention: exp(-||x - z||^2 / (2 * spread)), i.e. the
# spread parameter is the squared bandwidth sigma^2 (larger spread ->
# flatter kernel).  See docs/config-example.toml.
GAUSSIAN_SPREAD_IS_SIGMA_SQUARED = True

_SYM_TOL = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """One base kernel: linear, polynomial, or Gaussian, optionally normalized.

    Normalization divides by sqrt(k(x,x) k(z,z)) so that self-similarity
    is exactly 1 for every sample with nonzero raw self-similarity.
    """

    kind: str  # "linear" | "polynomial" | "gaussian"
    degree: int = 2
    offset: float = 1.0
    spread: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial", "gaussian"):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if self.kind == "polynomial":
            if self.degree < 1:
                raise ValueError("polynomial degree must be >= 1")
            if self.offset < 0:
                raise ValueError("polynomial offset must be >= 0")
        if self.kind == "gaussian" and self.spread <= 0:
            raise ValueError("gaussian spread must be > 0")

    @property
    def name(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "polynomial":
            return f"poly{self.degree}"
        return f"gauss{self.spread:g}"


@dataclass
class KernelBank:
    """T x M family of Gram matrices: grams[t][m] is N_t x N_t."""

    specs: list[KernelSpec]
    grams: list[list[np.ndarray]]  # [task][kernel]

    @property
    def n_tasks(self) -> int:
        return len(self.grams)

    @property
    def n_kernels(self) -> int:
        return len(self.specs)

    @property
    def task_sizes(self) -> list[int]:
        return [g[0].shape[0] for g in self.grams]

    def validate(self) -> None:
        for t, task_grams in enumerate(self.grams):
            if len(task_grams) != len(self.specs):
                raise ValueError(f"task {t}: expected {len(self.specs)} grams")
            n = task_grams[0].shape[0]
            for m, (spec, K) in enumerate(zip(self.specs, task_grams)):
                if K.shape != (n, n):
                    raise ValueError(f"gram ({t},{m}) has shape {K.shape}, expected ({n},{n})")
                if np.max(np.abs(K - K.T)) > _SYM_TOL:
                    raise ValueError(f"gram ({t},{m}) is not symmetric")
                if spec.normalized and np.max(np.abs(np.diag(K) - 1.0)) > _SYM_TOL:
                    raise ValueError(f"gram ({t},{m}) is normalized but has non-unit diagonal")


def _raw_gram(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return X @ Z.T
    if spec.kind == "polynomial":
        return (X @ Z.T + spec.offset) ** spec.degree
    # gaussian
    sq = (
        np.sum(X * X, axis=1)[:, None]
        - 2.0 * (X @ Z.T)
        + np.sum(Z * Z, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * spec.spread))


def _raw_self(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    if spec.kind == "linear":
        return np.sum(X * X, axis=1)
    if spec.kind == "polynomial":
        return (np.sum(X * X, axis=1) + spec.offset) ** spec.degree
    return np.ones(X.shape[0])


def eval_kernel(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> float:
    """Kernel value k(x, z), normalized if the spec says so."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if x.shape[1] != z.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {z.shape[1]}")
    return float(gram_matrix(spec, x, z)[0, 0])


def gram_matrix(spec: KernelSpec, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
    """Pairwise kernel matrix on X, or the |X| x |Z| cross-Gram if Z is given."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a nonempty 2-D sample matrix")
    cross = Z is not None
    Zm = np.asarray(Z, dtype=float) if cross else X
    if Zm.ndim != 2 or Zm.shape[1] != X.shape[1]:
        raise ValueError("Z is dimension-incompatible with X")
    K = _raw_gram(spec, X, Zm)
    if spec.normalized:
        dx = _raw_self(spec, X)
        dz = _raw_self(spec, Zm) if cross else dx
        if np.any(dx == 0.0) or np.any(dz == 0.0):
            raise ValueError("zero raw self-similarity: cannot normalize degenerate input")
        K = K / np.sqrt(np.outer(dx, dz))
    if not cross:
        K = 0.5 * (K + K.T)  # kill rounding asymmetry
        if spec.normalized:
            np.fill_diagonal(K, 1.0)
    return K


def build_bank(specs: list[KernelSpec], tasks) -> KernelBank:
    """Precompute every Gram matrix for the given kernel specs and tasks.

    `tasks` is any iterable of objects with a `.features` (N_t x D) attribute,
    or bare feature matrices.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one kernel spec")
    feats = [np.asarray(getattr(t, "features", t), dtype=float) for t in tasks]
    if not feats:
        raise ValueError("need at least one task")
    for i, X in enumerate(feats):
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError(f"task {i} has no samples")
    grams = [[gram_matrix(spec, X) for spec in specs] for X in feats]
    bank = KernelBank(specs=specs, grams=grams)
    bank.validate()
    return bank


def combine(bank: KernelBank, task: int, theta_t: np.ndarray) -> np.ndarray:
    """Weighted kernel sum_m theta_t[m] * K_m for one task.

    A convex-cone combination of PSD matrices, hence PSD.
    """
    theta_t = np.asarray(theta_t, dtype=float)
    grams = bank.grams[task]
    if theta_t.shape != (len(grams),):
        raise ValueError(f"theta has length {theta_t.size}, expected {len(grams)}")
    if np.any(theta_t < 0):
        raise ValueError("kernel weights must be nonnegative")
    n = grams[0].shape[0]
    out = np.zeros((n, n))
    for w, K in zip(theta_t, grams):
        if w != 0.0:
            out += w * K
    return out
