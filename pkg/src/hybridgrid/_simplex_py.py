"""NumPy implementation of the tableau simplex iteration.

Mirrors ``_simplex_core.pyx`` step for step; used when the compiled
extension is unavailable or ``HYBRIDGRID_BACKEND=python`` is set.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def pivot(T, basis, r, c):
    T[r, :] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r, :])
    T[:, c] = 0.0
    T[r, c] = 1.0
    basis[r] = c


def run_simplex(T, basis, n_enter, max_iter, tol, piv_tol, bland_after):
    """Iterate on tableau ``T`` (objective in the last row, rhs in the last column).

    Entering columns are restricted to ``[0, n_enter)``. Dantzig's rule with
    lowest-index ties; after ``bland_after`` consecutive degenerate pivots it
    switches to Bland's rule until the next nondegenerate pivot.
    Returns ``(status, iterations)``.
    """
    m = T.shape[0] - 1
    ncol = T.shape[1] - 1
    streak = 0
    it = 0
    while it < max_iter:
        rc = T[m, :n_enter]
        if streak >= bland_after:
            neg = np.flatnonzero(rc < -tol)
            if neg.size == 0:
                return OPTIMAL, it
            c = int(neg[0])
        else:
            c = int(np.argmin(rc))
            if rc[c] >= -tol:
                return OPTIMAL, it
        colv = T[:m, c]
        rows = np.flatnonzero(colv > piv_tol)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = T[rows, ncol] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        pivot(T, basis, r, c)
        rhs = T[:m, ncol]
        rhs[(rhs < 0.0) & (rhs > -tol)] = 0.0
        if best <= 1e-12:
            streak += 1
        else:
            streak = 0
        it += 1
    return ITERATION_LIMIT, it
