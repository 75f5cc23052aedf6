"""Pure-numpy SMO core: two-variable working-set ascent for box+equality duals.

Solves, in minimization form,

    min_alpha  0.5 alpha' Q alpha - p' alpha
    s.t.       0 <= alpha <= upper,  y' alpha = rhs,  y in {-1,+1}^n

which covers the SVM, SVDD, and one-class SVM duals.  Working-set
selection is the maximal KKT-violating pair; ties break to the lowest
index so the compiled and pure solvers produce identical iterates.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_TAU = 1e-12


def smo_solve(Q, p, y, upper, alpha, tol, max_iter):
    """Run SMO in place on `alpha`; return (n_iter, final KKT violation).

    `alpha` must be feasible on entry (box and equality satisfied).
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    n = alpha.shape[0]

    grad = Q @ alpha - p
    # -y*grad is the ascent rate of the Lagrange multiplier candidate
    for it in range(max_iter):
        f = -y * grad
        up_mask = ((y > 0) & (alpha < upper - 0.0)) | ((y < 0) & (alpha > 0.0))
        low_mask = ((y > 0) & (alpha > 0.0)) | ((y < 0) & (alpha < upper - 0.0))
        if not up_mask.any() or not low_mask.any():
            return it, 0.0

        f_up = np.where(up_mask, f, -np.inf)
        f_low = np.where(low_mask, f, np.inf)
        i = int(np.argmax(f_up))
        j = int(np.argmin(f_low))
        violation = f_up[i] - f_low[j]
        if violation <= tol:
            return it, float(violation)

        # direction: alpha_i += y_i*delta, alpha_j -= y_j*delta keeps y'alpha
        curv = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        if curv <= _TAU:
            curv = _TAU
        delta = violation / curv

        # clip to the box
        if y[i] > 0:
            delta = min(delta, upper[i] - alpha[i])
        else:
            delta = min(delta, alpha[i])
        if y[j] > 0:
            delta = min(delta, alpha[j])
        else:
            delta = min(delta, upper[j] - alpha[j])

        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        grad += delta * (y[i] * Q[:, i] - y[j] * Q[:, j])

    f = -y * grad
    up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0.0))
    low_mask = ((y > 0) & (alpha > 0.0)) | ((y < 0) & (alpha < upper))
    viol = float(np.max(np.where(up_mask, f, -np.inf)) - np.min(np.where(low_mask, f, np.inf)))
    return max_iter, viol


def kkt_violation(Q, p, y, upper, alpha):
    """Maximal violating-pair gap at `alpha` (0 means KKT-optimal)."""
    Q = np.asarray(Q, dtype=np.float64)
    grad = Q @ alpha - np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    f = -y * grad
    up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0.0))
    low_mask = ((y > 0) & (alpha > 0.0)) | ((y < 0) & (alpha < upper))
    if not up_mask.any() or not low_mask.any():
        return 0.0
    return float(np.max(f[up_mask]) - np.min(f[low_mask]))
