"""Small-scale convex solving: LPs and SOCPs with a pluggable backend.

The reference backend is the self-contained interior-point core in
``conic.py``.  Alternative backends can be registered by implementing the
``SolverBackend`` protocol; the test suite runs against the reference alone.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .conic import ConeDims, solve_conic
from .programs import (
    ConeProgram,
    LinearProgram,
    SocConstraint,
    SolveResult,
    program_from_json,
    program_to_json,
)
from .verify import constraint_violations, max_violation, objective_value

__all__ = [
    "ConeProgram",
    "LinearProgram",
    "SocConstraint",
    "SolveResult",
    "SolverBackend",
    "ReferenceBackend",
    "solve_lp",
    "solve_socp",
    "constraint_violations",
    "max_violation",
    "objective_value",
    "program_to_json",
    "program_from_json",
]


class SolverBackend(Protocol):
    def solve_lp(self, lp: LinearProgram, tol: float) -> SolveResult: ...

    def solve_socp(self, cp: ConeProgram, tol: float) -> SolveResult: ...


def _to_conic(prog: LinearProgram | ConeProgram):
    """Convert to the standard conic form consumed by solve_conic.

    A PSD quadratic objective x'Qx is lifted to an epigraph variable t with
    the rotated-cone identity  x'Qx <= t  <=>  ||(2 L'x, 1 - t)|| <= 1 + t
    where Q = L L'.
    """
    if isinstance(prog, ConeProgram):
        lp, cones, q_quad = prog.core, prog.cones, prog.q_quad
    else:
        lp, cones, q_quad = prog, [], None
    n = lp.num_vars

    lift = None
    if q_quad is not None:
        vals, vecs = np.linalg.eigh(q_quad)
        keep = vals > max(1e-12 * max(vals.max(), 1.0), 0.0)
        if np.any(keep):
            lift = vecs[:, keep] * np.sqrt(vals[keep])

    n_ext = n + (1 if lift is not None else 0)
    c = np.zeros(n_ext)
    c[:n] = lp.c
    if lift is not None:
        c[n] = 1.0

    g_rows: list[np.ndarray] = []
    h_vals: list[float] = []

    def add_row(row: np.ndarray, rhs: float) -> None:
        g_rows.append(row[None, :])
        h_vals.append(rhs)

    if lp.a_ub is not None and lp.a_ub.size:
        block = np.zeros((lp.a_ub.shape[0], n_ext))
        block[:, :n] = lp.a_ub
        g_rows.append(block)
        h_vals.extend(float(v) for v in lp.b_ub)
    hi_idx = np.flatnonzero(np.isfinite(lp.hi))
    if hi_idx.size:
        block = np.zeros((hi_idx.size, n_ext))
        block[np.arange(hi_idx.size), hi_idx] = 1.0
        g_rows.append(block)
        h_vals.extend(float(v) for v in lp.hi[hi_idx])
    lo_idx = np.flatnonzero(np.isfinite(lp.lo))
    if lo_idx.size:
        block = np.zeros((lo_idx.size, n_ext))
        block[np.arange(lo_idx.size), lo_idx] = -1.0
        g_rows.append(block)
        h_vals.extend(float(-v) for v in lp.lo[lo_idx])
    n_lin = sum(b.shape[0] for b in g_rows)

    q_dims: list[int] = []
    for cone in cones:
        F = np.atleast_2d(np.asarray(cone.F, dtype=float))
        k = F.shape[0]
        head = np.zeros(n_ext)
        head[:n] = -np.asarray(cone.d, dtype=float)
        add_row(head, float(cone.e))
        for j in range(k):
            row = np.zeros(n_ext)
            row[:n] = -F[j]
            add_row(row, float(cone.g[j]))
        q_dims.append(k + 1)

    if lift is not None:
        k = lift.shape[1]
        head = np.zeros(n_ext)
        head[n] = -1.0
        add_row(head, 1.0)
        for j in range(k):
            row = np.zeros(n_ext)
            row[:n] = -2.0 * lift[:, j]
            add_row(row, 0.0)
        tail = np.zeros(n_ext)
        tail[n] = 1.0
        add_row(tail, 1.0)
        q_dims.append(k + 2)

    G = np.vstack(g_rows) if g_rows else np.zeros((0, n_ext))
    h = np.asarray(h_vals)
    dims = ConeDims(l=n_lin, q=q_dims)

    a_eq, b_eq = None, None
    if lp.a_eq is not None:
        a_eq = np.zeros((lp.a_eq.shape[0], n_ext))
        a_eq[:, :n] = lp.a_eq
        b_eq = lp.b_eq
    return c, G, h, dims, a_eq, b_eq, n


class ReferenceBackend:
    """Default backend: the dense homogeneous self-dual interior-point core."""

    def __init__(self, max_iter: int = 200):
        self.max_iter = max_iter

    def _solve(self, prog, tol: float) -> SolveResult:
        c, G, h, dims, a_eq, b_eq, n = _to_conic(prog)
        res = solve_conic(c, G, h, dims, a_eq, b_eq, tol=tol, max_iter=self.max_iter)
        if res.status == "optimal":
            x = res.x[:n]
            obj = objective_value(prog, x)
        else:
            x = res.x[:n] if res.x is not None else None
            obj = np.nan
        return SolveResult(
            status=res.status,
            x=x,
            objective=obj,
            primal_residual=res.primal_residual,
            dual_residual=res.dual_residual,
            gap=res.gap,
            iterations=res.iterations,
        )

    def solve_lp(self, lp: LinearProgram, tol: float = 1e-7) -> SolveResult:
        return self._solve(lp, tol)

    def solve_socp(self, cp: ConeProgram, tol: float = 1e-7) -> SolveResult:
        return self._solve(cp, tol)


_DEFAULT_BACKEND = ReferenceBackend()


def solve_lp(lp: LinearProgram, tol: float = 1e-7,
             backend: SolverBackend | None = None) -> SolveResult:
    return (backend or _DEFAULT_BACKEND).solve_lp(lp, tol)


def solve_socp(cp: ConeProgram, tol: float = 1e-7,
               backend: SolverBackend | None = None) -> SolveResult:
    return (backend or _DEFAULT_BACKEND).solve_socp(cp, tol)
