# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled SMO core; algorithmic twin of _smo_py (same iterates, same ties)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

cdef double _TAU = 1e-12
cdef double _INF = float("inf")


def smo_solve(object Q_in, object p_in, object y_in, object upper_in,
              cnp.ndarray[cnp.float64_t, ndim=1] alpha, double tol, long max_iter):
    """Run SMO in place on `alpha`; return (n_iter, final KKT violation)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Q = np.ascontiguousarray(Q_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] upper = np.ascontiguousarray(upper_in, dtype=np.float64)
    cdef Py_ssize_t n = alpha.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = Q.dot(alpha) - p

    cdef Py_ssize_t it, k, i, j
    cdef double fi, fj, fk, violation, curv, delta
    cdef bint k_up, k_low

    for it in range(max_iter):
        i = -1
        j = -1
        fi = -_INF
        fj = _INF
        for k in range(n):
            fk = -y[k] * grad[k]
            if y[k] > 0:
                k_up = alpha[k] < upper[k]
                k_low = alpha[k] > 0.0
            else:
                k_up = alpha[k] > 0.0
                k_low = alpha[k] < upper[k]
            if k_up and fk > fi:
                fi = fk
                i = k
            if k_low and fk < fj:
                fj = fk
                j = k
        if i < 0 or j < 0:
            return it, 0.0
        violation = fi - fj
        if violation <= tol:
            return it, violation

        curv = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
        if curv <= _TAU:
            curv = _TAU
        delta = violation / curv

        if y[i] > 0:
            if delta > upper[i] - alpha[i]:
                delta = upper[i] - alpha[i]
        else:
            if delta > alpha[i]:
                delta = alpha[i]
        if y[j] > 0:
            if delta > alpha[j]:
                delta = alpha[j]
        else:
            if delta > upper[j] - alpha[j]:
                delta = upper[j] - alpha[j]

        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        for k in range(n):
            grad[k] += delta * (y[i] * Q[k, i] - y[j] * Q[k, j])

    i = -1
    j = -1
    fi = -_INF
    fj = _INF
    for k in range(n):
        fk = -y[k] * grad[k]
        if y[k] > 0:
            k_up = alpha[k] < upper[k]
            k_low = alpha[k] > 0.0
        else:
            k_up = alpha[k] > 0.0
            k_low = alpha[k] < upper[k]
        if k_up and fk > fi:
            fi = fk
            i = k
        if k_low and fk < fj:
            fj = fk
            j = k
    if i < 0 or j < 0:
        return max_iter, 0.0
    return max_iter, fi - fj
