"""Pure-Python twin of the compiled simplex pivot kernel.

Operates on a dense tableau laid out as

    row 0        reduced costs | -objective
    rows 1..m    B^-1 A        | B^-1 b

`basis[i]` is the column basic in tableau row i+1.  Entering column follows
Bland's rule (smallest eligible index); the leaving row takes the smallest
basic index among min-ratio ties.  Both choices are deterministic and the
pair rules out cycling at the tolerance level used here.

The compiled kernel in _pivot_cy.pyx implements the identical contract.
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def lp_pivot_loop(tab, basis, allowed, tol, max_iter):
    """Run simplex pivots in place; returns (status, pivots_done)."""
    n = tab.shape[1] - 1
    cost = tab[0]
    allowed_b = allowed.astype(bool)
    for it in range(max_iter):
        candidates = np.nonzero(allowed_b & (cost[:n] < -tol))[0]
        if candidates.size == 0:
            return OPTIMAL, it
        j = int(candidates[0])

        col = tab[1:, j]
        rows = np.nonzero(col > tol)[0]
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = tab[1 + rows, n] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-9 * abs(best) + 1e-12]
        r = int(tied[np.argmin(basis[tied])])

        piv = tab[r + 1, j]
        tab[r + 1] /= piv
        row_r = tab[r + 1].copy()
        factor = tab[:, j].copy()
        factor[r + 1] = 0.0
        tab -= np.outer(factor, row_r)
        tab[r + 1] = row_r
        tab[:, j] = 0.0
        tab[r + 1, j] = 1.0
        basis[r] = j
    return BUDGET, max_iter
