"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own solvers: quadratic
programs go through scipy's SLSQP with analytic gradients, and the
mixed-norm linear programs are solved both jointly and by exhaustive
budget enumeration so a closed-form answer can be checked against a
slower, structurally different method.
"""

import numpy as np
import pytest
from scipy.optimize import NonlinearConstraint, minimize

from mtmkl import KernelSpec, TaskData


# ---------------------------------------------------------------------------
# QP oracle for the box/equality duals (minimization form)

def qp_oracle(Q, p, sign, upper, rhs):
    """min 0.5 a'Qa - p'a  s.t.  0 <= a <= upper, sign'a = rhs, via SLSQP."""
    n = len(p)

    def fun(a):
        return 0.5 * a @ Q @ a - p @ a

    def jac(a):
        return Q @ a - p

    cons = [{"type": "eq", "fun": lambda a: sign @ a - rhs, "jac": lambda a: sign}]
    bounds = [(0.0, u) for u in upper]
    best = None
    rng = np.random.default_rng(7)
    starts = [np.zeros(n), np.minimum(upper, np.full(n, rhs / max(1, n)))]
    starts += [rng.uniform(0, 1, n) * upper for _ in range(3)]
    for a0 in starts:
        # project the start onto the equality constraint where possible
        if sign @ a0 != rhs and np.all(sign == sign[0]):
            total = sign[0] * np.sum(a0)
            if total > 0:
                a0 = np.minimum(a0 * (rhs / total), upper)
        res = minimize(fun, a0, jac=jac, method="SLSQP", bounds=bounds,
                       constraints=cons, options={"maxiter": 400, "ftol": 1e-14})
        if res.success and abs(sign @ res.x - rhs) < 1e-8:
            if best is None or res.fun < best:
                best = float(res.fun)
    assert best is not None, "QP oracle failed on every start"
    return best


# ---------------------------------------------------------------------------
# mixed-norm linear-program oracles

def _norm_p(v, p):
    v = np.abs(v)
    if p == 1:
        return float(np.sum(v))
    return float(np.sum(v ** p) ** (1.0 / p))


def lp_ball_oracle(c, p, a=1.0):
    """min c'theta over {theta >= 0, ||theta||_p <= a} via SLSQP."""
    c = np.asarray(c, dtype=float)
    M = c.size
    cons = [NonlinearConstraint(lambda th: _norm_p(th, p), 0.0, a)]
    bounds = [(0.0, a)] * M
    best = 0.0  # theta = 0 is always feasible
    rng = np.random.default_rng(11)
    starts = [np.full(M, a * M ** (-1.0 / p))]
    starts += [rng.uniform(0, a / M, M) for _ in range(4)]
    # vertex starts: all budget on one coordinate
    starts += [a * np.eye(M)[j] for j in range(M)]
    for th0 in starts:
        res = minimize(lambda th: c @ th, th0, jac=lambda th: c, method="SLSQP",
                       bounds=bounds, constraints=cons,
                       options={"maxiter": 300, "ftol": 1e-14})
        if res.success and _norm_p(res.x, p) <= a + 1e-9 and np.min(res.x) >= -1e-12:
            best = min(best, float(c @ res.x))
    return best


def lplq_oracle(c, p, q, a=1.0):
    """min sum_t c^t.theta^t over the nonneg Lp-Lq group ball.

    Joint SLSQP solve plus, for q = 1, exhaustive enumeration of which
    single group receives the whole budget; returns the best value found.
    """
    c = np.asarray(c, dtype=float)
    T, M = c.shape

    def group_norm(flat):
        th = flat.reshape(T, M)
        gs = np.array([_norm_p(th[t], p) for t in range(T)])
        return _norm_p(gs, q)

    best = 0.0
    cons = [NonlinearConstraint(group_norm, 0.0, a)]
    bounds = [(0.0, a)] * (T * M)
    rng = np.random.default_rng(13)
    starts = [np.full(T * M, a * (T * M) ** (-1.0 / min(p, q)) / 2)]
    starts += [rng.uniform(0, a / (T * M), T * M) for _ in range(4)]
    flat_c = c.ravel()
    for th0 in starts:
        res = minimize(lambda th: flat_c @ th, th0, jac=lambda th: flat_c,
                       method="SLSQP", bounds=bounds, constraints=cons,
                       options={"maxiter": 400, "ftol": 1e-14})
        if res.success and group_norm(res.x) <= a + 1e-9 and np.min(res.x) >= -1e-12:
            best = min(best, float(flat_c @ res.x))
    # exhaustive budget enumeration (exact for q = 1, a lower bound otherwise)
    if q == 1:
        for t in range(T):
            best = min(best, lp_ball_oracle(c[t], p, a))
    return best


# ---------------------------------------------------------------------------
# small synthetic task generators

def margin_sample(rng, n, shift, margin):
    """2-D points uniform on [0,1]^2 with a linear boundary and a hard margin."""
    X = np.empty((0, 2))
    while X.shape[0] < n:
        cand = rng.uniform(0, 1, (6 * n, 2))
        X = np.vstack([X, cand[np.abs(cand[:, 0] + cand[:, 1] - shift) > margin]])
    X = X[:n]
    return X, np.where(X[:, 0] + X[:, 1] > shift, 1.0, -1.0)


def ring_sample(rng, n, margin):
    """2-D points labeled by distance from the center (inside vs outside)."""
    X = np.empty((0, 2))
    while X.shape[0] < n:
        cand = rng.uniform(0, 1, (6 * n, 2))
        r = np.linalg.norm(cand - 0.5, axis=1)
        X = np.vstack([X, cand[np.abs(r - 0.3) > margin]])
    X = X[:n]
    return X, np.where(np.linalg.norm(X - 0.5, axis=1) < 0.3, 1.0, -1.0)


def three_binary_tasks(seed, n_train=30, n_test=0):
    """Two wide-margin linear tasks plus one ring task (shared-space setup)."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    total = n_train + n_test
    for shift in (0.95, 1.05):
        X, y = margin_sample(rng, total, shift, 0.30)
        train.append(TaskData(X[:n_train], y[:n_train], f"lin{shift}"))
        if n_test:
            test.append(TaskData(X[n_train:], y[n_train:], f"lin{shift}"))
    X, y = ring_sample(rng, total, 0.02)
    train.append(TaskData(X[:n_train], y[:n_train], "ring"))
    if n_test:
        test.append(TaskData(X[n_train:], y[n_train:], "ring"))
    return (train, test) if n_test else train


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_specs():
    return [KernelSpec("linear"),
            KernelSpec("polynomial", degree=2, offset=1.0),
            KernelSpec("gaussian", spread=0.5)]


def random_tasks(rng, T=3, n_max=20, d=3, labeled=True):
    """Random labeled tasks with both classes present."""
    tasks = []
    for t in range(T):
        n = int(rng.integers(8, n_max + 1))
        X = rng.uniform(0, 1, (n, d))
        if labeled:
            y = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
            y[0], y[1] = 1.0, -1.0  # both classes present
        else:
            y = None
        tasks.append(TaskData(X, y, f"task{t}"))
    return tasks


def random_psd(rng, n, normalized=False):
    """Random PSD matrix, optionally with unit diagonal."""
    A = rng.normal(size=(n, n))
    K = A @ A.T / n + 1e-3 * np.eye(n)
    if normalized:
        d = np.sqrt(np.diag(K))
        K = K / np.outer(d, d)
        np.fill_diagonal(K, 1.0)
    return K
