"""Independent feasibility re-check for solver output.

Deliberately separate from the solver's own residuals: every constraint class
is evaluated from the raw problem data at the returned point.
"""

from __future__ import annotations

import numpy as np

from .programs import ConeProgram, LinearProgram


def constraint_violations(prog: LinearProgram | ConeProgram, x: np.ndarray) -> dict[str, float]:
    """Max violation per constraint class (0 when the class is absent)."""
    lp = prog.core if isinstance(prog, ConeProgram) else prog
    x = np.asarray(x, dtype=float)
    out = {"bounds": 0.0, "inequality": 0.0, "equality": 0.0, "cone": 0.0}
    lo_gap = np.where(np.isfinite(lp.lo), lp.lo - x, 0.0)
    hi_gap = np.where(np.isfinite(lp.hi), x - lp.hi, 0.0)
    out["bounds"] = float(max(lo_gap.max(initial=0.0), hi_gap.max(initial=0.0)))
    if lp.a_ub is not None:
        out["inequality"] = float(np.max(lp.a_ub @ x - lp.b_ub, initial=0.0))
    if lp.a_eq is not None:
        out["equality"] = float(np.max(np.abs(lp.a_eq @ x - lp.b_eq), initial=0.0))
    if isinstance(prog, ConeProgram):
        worst = 0.0
        for cone in prog.cones:
            lhs = np.linalg.norm(np.atleast_2d(cone.F) @ x + cone.g)
            rhs = float(np.asarray(cone.d) @ x) + cone.e
            worst = max(worst, lhs - rhs)
        out["cone"] = worst
    return out


def max_violation(prog: LinearProgram | ConeProgram, x: np.ndarray) -> float:
    return max(constraint_violations(prog, x).values())


def objective_value(prog: LinearProgram | ConeProgram, x: np.ndarray) -> float:
    lp = prog.core if isinstance(prog, ConeProgram) else prog
    val = float(lp.c @ x) + lp.c0
    if isinstance(prog, ConeProgram) and prog.q_quad is not None:
        val += float(x @ prog.q_quad @ x)
    return val
