"""Dual objectives for the four kernel machines and their inner maximization.

All four duals are concave in alpha and affine in the kernel entries, so
for a fixed alpha the multi-task objective is linear in the kernel
weights; `linearize` extracts those coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._backend import kkt_violation, smo_solve
from .kernels import KernelBank

__all__ = [
    "LearnerKind",
    "DualSolution",
    "LinearizedObjective",
    "SolverError",
    "dual_objective",
    "maximize_dual",
    "linearize",
]

MAX_SMO_ITER_PER_SAMPLE = 100_000


class SolverError(RuntimeError):
    """Inner dual solver failed (iteration cap or infeasible constraints)."""


@dataclass(frozen=True)
class LearnerKind:
    """Which dual to train and its regularization constants.

    kind: "svm" (box C, labels), "krr" (ridge lam, targets),
    "svdd" (box C, unlabeled), "ocsvm" (box 1/(nu*l), unlabeled).
    For ocsvm, l defaults to the task's sample count at solve time.
    """

    kind: str
    C: float = 1.0
    lam: float = 1.0
    nu: float = 0.5
    l: int | None = None

    def __post_init__(self):
        if self.kind not in ("svm", "krr", "svdd", "ocsvm"):
            raise ValueError(f"unknown learner kind: {self.kind!r}")
        if self.kind in ("svm", "svdd") and self.C <= 0:
            raise ValueError("C must be > 0")
        if self.kind == "krr" and self.lam <= 0:
            raise ValueError("lambda must be > 0")
        if self.kind == "ocsvm" and not 0 < self.nu <= 1:
            raise ValueError("nu must be in (0, 1]")

    @property
    def needs_labels(self) -> bool:
        return self.kind in ("svm", "krr")

    def box_upper(self, n: int) -> float:
        if self.kind == "svm" or self.kind == "svdd":
            return self.C
        if self.kind == "ocsvm":
            l = self.l if self.l is not None else n
            return 1.0 / (self.nu * l)
        raise ValueError("krr has no box constraint")


@dataclass
class DualSolution:
    """Per-task inner maximizers and their objective values."""

    alphas: list[np.ndarray]
    objective_values: np.ndarray  # length T
    kkt_residual: np.ndarray  # length T

    @property
    def total(self) -> float:
        return float(np.sum(self.objective_values))


@dataclass
class LinearizedObjective:
    """sum_t g(alpha^t, K_theta^t) written as sum_t (c^t . theta^t + d^t)."""

    c: np.ndarray  # T x M
    d: np.ndarray  # length T

    def value(self, theta: np.ndarray) -> float:
        return float(np.sum(self.c * theta) + np.sum(self.d))


def dual_objective(kind: LearnerKind, alpha: np.ndarray, K: np.ndarray,
                   y: np.ndarray | None = None) -> float:
    """Value of the chosen dual objective at alpha for the combined kernel K."""
    alpha = np.asarray(alpha, dtype=float)
    n = alpha.shape[0]
    if K.shape != (n, n):
        raise ValueError(f"kernel shape {K.shape} does not match alpha length {n}")
    if kind.needs_labels:
        if y is None:
            raise ValueError(f"{kind.kind} requires labels")
        y = np.asarray(y, dtype=float)
    if kind.kind == "svm":
        ya = y * alpha
        return float(np.sum(alpha) - 0.5 * ya @ K @ ya)
    if kind.kind == "krr":
        return float(2.0 * alpha @ y - kind.lam * alpha @ alpha - alpha @ K @ alpha)
    if kind.kind == "svdd":
        return float(alpha @ np.diag(K) - alpha @ K @ alpha)
    return float(-alpha @ K @ alpha)  # ocsvm


def _smo_setup(kind: LearnerKind, K: np.ndarray, y: np.ndarray | None):
    """Map the dual to min 0.5 a'Qa - p'a, 0 <= a <= upper, sign'a = rhs."""
    n = K.shape[0]
    upper = kind.box_upper(n)
    if kind.kind == "svm":
        Q = (y[:, None] * K) * y[None, :]
        p = np.ones(n)
        sign = y.astype(float)
    elif kind.kind == "svdd":
        Q = 2.0 * K
        p = np.diag(K).copy()
        sign = np.ones(n)
        if upper * n < 1.0:
            raise SolverError(f"svdd infeasible: C*n = {upper * n:g} < 1")
    else:  # ocsvm
        Q = 2.0 * K
        p = np.zeros(n)
        sign = np.ones(n)
        if upper * n < 1.0:
            raise SolverError(f"ocsvm infeasible: n/(nu*l) = {upper * n:g} < 1")
    return Q, p, sign, np.full(n, upper)


def _feasible_start(kind: LearnerKind, n: int) -> np.ndarray:
    if kind.kind == "svm":
        return np.zeros(n)
    return np.full(n, 1.0 / n)  # simplex center; box checked in _smo_setup


def maximize_dual(kind: LearnerKind, K: np.ndarray, y: np.ndarray | None = None,
                  tol: float = 1e-6,
                  alpha0: np.ndarray | None = None) -> tuple[np.ndarray, float, float]:
    """Maximize the dual over its feasible set; returns (alpha, value, kkt).

    KRR is an exact SPD solve; the box/equality duals run SMO until the
    maximal violating-pair gap is <= tol.  alpha0, when given, must be
    feasible and warm-starts SMO.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if y is not None:
        y = np.asarray(y, dtype=float)
        if y.shape != (n,):
            raise ValueError("label length mismatch")
    if kind.needs_labels and y is None:
        raise ValueError(f"{kind.kind} requires labels")

    if kind.kind == "krr":
        A = K + kind.lam * np.eye(n)
        cf = scipy.linalg.cho_factor(A, lower=True)
        alpha = scipy.linalg.cho_solve(cf, y)
        return alpha, dual_objective(kind, alpha, K, y), 0.0

    Q, p, sign, upper = _smo_setup(kind, K, y)
    alpha = np.array(alpha0, dtype=float) if alpha0 is not None else _feasible_start(kind, n)
    max_iter = MAX_SMO_ITER_PER_SAMPLE * n
    n_iter, viol = smo_solve(Q, p, sign, upper, alpha, tol, max_iter)
    if viol > tol:
        raise SolverError(
            f"SMO hit the iteration cap ({max_iter}) with KKT violation {viol:.3e} > {tol:g}")
    return alpha, dual_objective(kind, alpha, K, y), viol


def solve_all_tasks(kind: LearnerKind, bank: KernelBank, theta: np.ndarray,
                    labels: list[np.ndarray] | list[None], tol: float,
                    warm: DualSolution | None = None) -> DualSolution:
    """Inner maximization for every task at the current kernel weights."""
    alphas, values, kkts = [], [], []
    for t in range(bank.n_tasks):
        K = _combine_task(bank, t, theta[t])
        a0 = warm.alphas[t] if warm is not None else None
        alpha, value, viol = maximize_dual(kind, K, labels[t], tol, alpha0=a0)
        alphas.append(alpha)
        values.append(value)
        kkts.append(viol)
    return DualSolution(alphas=alphas, objective_values=np.array(values),
                        kkt_residual=np.array(kkts))


def _combine_task(bank: KernelBank, t: int, theta_t: np.ndarray) -> np.ndarray:
    grams = bank.grams[t]
    n = grams[0].shape[0]
    out = np.zeros((n, n))
    for w, K in zip(theta_t, grams):
        if w != 0.0:
            out += w * K
    return out


def linearize(kind: LearnerKind, duals: DualSolution, bank: KernelBank,
              labels: list[np.ndarray] | list[None]) -> LinearizedObjective:
    """Coefficients of theta in sum_t g(alpha^t, sum_m theta_m^t K_m^t)."""
    T, M = bank.n_tasks, bank.n_kernels
    c = np.zeros((T, M))
    d = np.zeros(T)
    for t in range(T):
        alpha = duals.alphas[t]
        if kind.kind == "svm":
            ya = labels[t] * alpha
            for m, K in enumerate(bank.grams[t]):
                c[t, m] = -0.5 * ya @ K @ ya
            d[t] = np.sum(alpha)
        elif kind.kind == "krr":
            for m, K in enumerate(bank.grams[t]):
                c[t, m] = -alpha @ K @ alpha
            d[t] = 2.0 * alpha @ labels[t] - kind.lam * alpha @ alpha
        elif kind.kind == "svdd":
            for m, K in enumerate(bank.grams[t]):
                c[t, m] = alpha @ np.diag(K) - alpha @ K @ alpha
        else:  # ocsvm
            for m, K in enumerate(bank.grams[t]):
                c[t, m] = -alpha @ K @ alpha
    return LinearizedObjective(c=c, d=d)
