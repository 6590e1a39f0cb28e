# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex pivot kernel; contract identical to pivot_py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def lp_pivot_loop(double[:, ::1] tab, long long[::1] basis,
                  unsigned char[::1] allowed, double tol, long long max_iter):
    """Run simplex pivots in place; returns (status, pivots_done)."""
    cdef Py_ssize_t m = tab.shape[0] - 1
    cdef Py_ssize_t n = tab.shape[1] - 1
    cdef Py_ssize_t it, i, j, r, col
    cdef double best, ratio, thresh, piv, factor
    cdef Py_ssize_t entering, leaving
    cdef long long best_basis

    for it in range(max_iter):
        entering = -1
        for j in range(n):
            if allowed[j] and tab[0, j] < -tol:
                entering = j
                break
        if entering < 0:
            return OPTIMAL, it

        leaving = -1
        best = 0.0
        for i in range(m):
            if tab[i + 1, entering] > tol:
                ratio = tab[i + 1, n] / tab[i + 1, entering]
                if leaving < 0 or ratio < best:
                    best = ratio
                    leaving = i
        if leaving < 0:
            return UNBOUNDED, it
        # min-ratio ties resolved toward the smallest basic index
        thresh = best + 1e-9 * (best if best > 0 else -best) + 1e-12
        best_basis = basis[leaving]
        for i in range(m):
            if i != leaving and tab[i + 1, entering] > tol:
                ratio = tab[i + 1, n] / tab[i + 1, entering]
                if ratio <= thresh and basis[i] < best_basis:
                    best_basis = basis[i]
                    leaving = i

        r = leaving
        piv = tab[r + 1, entering]
        for col in range(n + 1):
            tab[r + 1, col] /= piv
        for i in range(m + 1):
            if i == r + 1:
                continue
            factor = tab[i, entering]
            if factor != 0.0:
                for col in range(n + 1):
                    tab[i, col] -= factor * tab[r + 1, col]
        for i in range(m + 1):
            tab[i, entering] = 0.0
        tab[r + 1, entering] = 1.0
        basis[r] = entering
    return BUDGET, max_iter
