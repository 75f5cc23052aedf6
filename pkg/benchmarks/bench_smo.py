"""Benchmark the compiled SMO core against the pure-numpy fallback.

Both backends implement the identical algorithm (same pair selection,
same tie-breaks), so this measures implementation overhead only.

Run:  python3 benchmarks/bench_smo.py
"""

import time

import numpy as np

from mtmkl import _smo_py
from mtmkl.kernels import KernelSpec, gram_matrix

try:
    from mtmkl import _smo_cy
except ImportError:
    _smo_cy = None


def svm_problem(rng, n, C=1.0):
    X = rng.uniform(0, 1, (n, 4))
    K = gram_matrix(KernelSpec("gaussian", spread=0.3), X)
    y = np.where(rng.uniform(size=n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    Q = (y[:, None] * K) * y[None, :]
    return Q, np.ones(n), y, np.full(n, C)


def time_solver(solver, problems, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for Q, p, y, upper in problems:
            alpha = np.zeros(len(p))
            solver(Q, p, y, upper, alpha, 1e-6, 10_000_000)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'problems':>9} {'python (s)':>12} {'cython (s)':>12} {'speedup':>8}")
    for n, count in ((50, 20), (100, 10), (200, 5), (400, 3)):
        problems = [svm_problem(rng, n) for _ in range(count)]
        t_py = time_solver(_smo_py.smo_solve, problems)
        if _smo_cy is None:
            print(f"{n:>6} {count:>9} {t_py:>12.4f} {'n/a':>12} {'n/a':>8}")
            continue
        t_cy = time_solver(_smo_cy.smo_solve, problems)
        # sanity: identical outputs
        Q, p, y, upper = problems[0]
        a1, a2 = np.zeros(n), np.zeros(n)
        _smo_py.smo_solve(Q, p, y, upper, a1, 1e-6, 10_000_000)
        _smo_cy.smo_solve(Q, p, y, upper, a2, 1e-6, 10_000_000)
        assert np.array_equal(a1, a2), "backends disagree"
        print(f"{n:>6} {count:>9} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
