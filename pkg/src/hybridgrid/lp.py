"""Dense two-phase simplex with dual extraction.

The tableau iteration runs in the compiled ``_simplex_core`` extension when
it is importable, otherwise in the NumPy fallback ``_simplex_py``. Setting
``HYBRIDGRID_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from . import _simplex_py
from .errors import SolverError, UnboundedError

log = logging.getLogger(__name__)

try:
    from . import _simplex_core
except ImportError:  # pragma: no cover - depends on the build
    _simplex_core = None

_KERNELS = {"python": _simplex_py}
if _simplex_core is not None:
    _KERNELS["cython"] = _simplex_core

if os.environ.get("HYBRIDGRID_BACKEND", "").lower() == "python" or _simplex_core is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

RC_TOL = 1e-9
PIVOT_TOL = 1e-9
BLAND_AFTER = 25


def available_backends() -> list[str]:
    return sorted(_KERNELS)


@dataclass
class LinearProgram:
    """min c.x + c0  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  lb <= x <= ub."""

    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c0: float = 0.0
    var_names: list[str] = field(default_factory=list)
    eq_names: list[str] = field(default_factory=list)
    ub_names: list[str] = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.c)


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None = None
    objective: float = float("nan")
    y_eq: np.ndarray | None = None
    y_ub: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    infeasible_rows: list[str] = field(default_factory=list)

    def dual_objective(self, lp: LinearProgram) -> float:
        """Lagrangian dual value built from the row duals and reduced costs."""
        val = lp.c0 + float(lp.b_eq @ self.y_eq) + float(lp.b_ub @ self.y_ub)
        for j, r in enumerate(self.reduced_costs):
            bound = lp.lb[j] if r > 0 else lp.ub[j]
            if r != 0 and np.isfinite(bound):
                val += r * bound
            elif abs(r) > 1e-7:
                # dual infeasible: reduced cost pushes against an infinite bound
                return -np.inf
        return val


def solve_lp(lp: LinearProgram, backend: str | None = None, max_iter: int | None = None) -> LpResult:
    kernel = _KERNELS[backend or BACKEND]
    n = lp.n_vars
    lb = np.asarray(lp.lb, dtype=float)
    ub = np.asarray(lp.ub, dtype=float)
    if np.any(ub < lb):
        j = int(np.flatnonzero(ub < lb)[0])
        name = lp.var_names[j] if lp.var_names else f"x{j}"
        return LpResult("infeasible", infeasible_rows=[f"bounds of {name}"])

    # x = offset + M x', x' >= 0
    offset = np.zeros(n)
    cols: list[list[tuple[int, float]]] = []
    bound_rows: list[tuple[int, float]] = []  # (std col, rhs)
    n_std = 0
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append([(n_std, 1.0)])
            if np.isfinite(hi):
                bound_rows.append((n_std, hi - lo))
            n_std += 1
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append([(n_std, -1.0)])
            n_std += 1
        else:
            cols.append([(n_std, 1.0), (n_std + 1, -1.0)])
            n_std += 2
    M = np.zeros((n, n_std))
    for j, entries in enumerate(cols):
        for k, s in entries:
            M[j, k] = s

    a_eq = np.asarray(lp.a_eq, dtype=float).reshape(-1, n)
    a_ub = np.asarray(lp.a_ub, dtype=float).reshape(-1, n)
    m_eq, m_ub, m_bd = a_eq.shape[0], a_ub.shape[0], len(bound_rows)
    m = m_eq + m_ub + m_bd
    n_slack = m_ub + m_bd

    A = np.zeros((m, n_std + n_slack))
    b = np.zeros(m)
    A[:m_eq, :n_std] = a_eq @ M
    b[:m_eq] = lp.b_eq - a_eq @ offset
    A[m_eq:m_eq + m_ub, :n_std] = a_ub @ M
    b[m_eq:m_eq + m_ub] = lp.b_ub - a_ub @ offset
    for k, (col, rhs) in enumerate(bound_rows):
        A[m_eq + m_ub + k, col] = 1.0
        b[m_eq + m_ub + k] = rhs
    for k in range(n_slack):
        A[m_eq + k, n_std + k] = 1.0
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign

    init_col = np.empty(m, dtype=np.int64)
    art_rows = []
    for i in range(m):
        if i >= m_eq and sign[i] > 0:
            init_col[i] = n_std + (i - m_eq)
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    n_real = n_std + n_slack
    N = n_real + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :n_real] = A
    T[:m, N] = b
    for k, i in enumerate(art_rows):
        T[i, n_real + k] = 1.0
        init_col[i] = n_real + k
    basis = np.array(init_col, dtype=np.dtype("l"), copy=True)

    c_std = np.zeros(N)
    c_std[:n_std] = lp.c @ M
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000
    iters = 0

    if n_art:
        T[m, n_real:N] = 1.0
        for i in art_rows:
            T[m, :] -= T[i, :]
        status, it = kernel.run_simplex(T, basis, n_real, max_iter, RC_TOL, PIVOT_TOL, BLAND_AFTER)
        iters += it
        if status != _simplex_py.OPTIMAL:
            raise SolverError(f"phase 1 did not converge (status {status})")
        infeas = -T[m, N]
        if infeas > 1e-7 * max(1.0, float(np.abs(b).max())):
            rows = [i for i in range(m) if basis[i] >= n_real and T[i, N] > 1e-9]
            names = (lp.eq_names + lp.ub_names + [f"bound {k}" for k in range(m_bd)])
            hint = [names[i] if i < len(names) else f"row {i}" for i in rows]
            return LpResult("infeasible", iterations=iters, infeasible_rows=hint)
        for i in range(m):
            if basis[i] >= n_real:
                row = np.abs(T[i, :n_real])
                j = int(np.argmax(row))
                if row[j] > PIVOT_TOL:
                    kernel.pivot(T, basis, i, j)

    T[m, :] = 0.0
    T[m, :N] = c_std
    for i in range(m):
        cb = c_std[basis[i]]
        if cb != 0.0:
            T[m, :] -= cb * T[i, :]
    status, it = kernel.run_simplex(T, basis, n_real, max_iter, RC_TOL, PIVOT_TOL, BLAND_AFTER)
    iters += it
    if status == _simplex_py.UNBOUNDED:
        raise UnboundedError("LP is unbounded; check for missing limits")
    if status != _simplex_py.OPTIMAL:
        raise SolverError(f"simplex hit the iteration limit ({max_iter})")

    xs = np.zeros(N)
    xs[basis] = T[:m, N]
    x = offset + M @ xs[:n_std]
    y_std = -T[m, init_col]
    y = sign * y_std
    y_eq = y[:m_eq]
    y_ub = y[m_eq:m_eq + m_ub]
    rc = lp.c - a_eq.T @ y_eq - a_ub.T @ y_ub
    log.debug("LP solved: %d rows, %d cols, %d pivots", m, N, iters)
    return LpResult("optimal", x=x, objective=float(lp.c @ x + lp.c0), y_eq=y_eq, y_ub=y_ub,
                    reduced_costs=rc, iterations=iters)
