# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tableau simplex iteration (same rules as _simplex_py)."""
from libc.math cimport fabs

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    ITERATION_LIMIT = 2


cdef void _pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t r, Py_ssize_t c) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nrow = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef double p = T[r, c]
    cdef double f
    for j in range(ncol):
        T[r, j] = T[r, j] / p
    for i in range(nrow):
        if i == r:
            continue
        f = T[i, c]
        if f == 0.0:
            continue
        for j in range(ncol):
            T[i, j] = T[i, j] - f * T[r, j]
        T[i, c] = 0.0
    T[r, c] = 1.0
    basis[r] = c


def pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t r, Py_ssize_t c):
    with nogil:
        _pivot(T, basis, r, c)


def run_simplex(double[:, ::1] T, long[::1] basis, Py_ssize_t n_enter, long max_iter,
                double tol, double piv_tol, long bland_after):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t ncol = T.shape[1] - 1
    cdef long streak = 0
    cdef long it = 0
    cdef Py_ssize_t i, j, c, r
    cdef double v, best, ratio, lim
    cdef int status = ITERATION_LIMIT
    with nogil:
        while it < max_iter:
            c = -1
            if streak >= bland_after:
                for j in range(n_enter):
                    if T[m, j] < -tol:
                        c = j
                        break
            else:
                v = T[m, 0]
                c = 0
                for j in range(1, n_enter):
                    if T[m, j] < v:
                        v = T[m, j]
                        c = j
                if v >= -tol:
                    c = -1
            if c < 0:
                status = OPTIMAL
                break
            best = 0.0
            r = -1
            for i in range(m):
                if T[i, c] > piv_tol:
                    ratio = T[i, ncol] / T[i, c]
                    if r < 0 or ratio < best:
                        best = ratio
                        r = i
            if r < 0:
                status = UNBOUNDED
                break
            lim = best + 1e-12 * (1.0 + fabs(best))
            for i in range(m):
                if T[i, c] > piv_tol:
                    ratio = T[i, ncol] / T[i, c]
                    if ratio <= lim and basis[i] < basis[r]:
                        r = i
            _pivot(T, basis, r, c)
            for i in range(m):
                if T[i, ncol] < 0.0 and T[i, ncol] > -tol:
                    T[i, ncol] = 0.0
            if best <= 1e-12:
                streak += 1
            else:
                streak = 0
            it += 1
    return status, it
