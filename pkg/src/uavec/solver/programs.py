"""Problem containers for the convex solver: LPs and second-order cone programs.

Both classes carry dense numpy data in a fixed standard form:

    minimize    c'x + x'Qx + c0
    subject to  A_ub x <= b_ub
                A_eq x == b_eq
                lo <= x <= hi
                ||F_i x + g_i||_2 <= d_i'x + e_i     (cone rows, SOCP only)

Q must be positive semidefinite.  Infinite bounds are allowed.  Problems are
serializable to a JSON debug format so failing solves can be reproduced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class SocConstraint:
    """One second-order cone row: ||F x + g|| <= d'x + e."""

    F: np.ndarray
    g: np.ndarray
    d: np.ndarray
    e: float

    def check_dims(self, n: int) -> None:
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if F.shape[1] != n or np.asarray(self.g).shape != (F.shape[0],):
            raise ValueError("cone rows dimension-inconsistent")
        if np.asarray(self.d).shape != (n,):
            raise ValueError("cone linear part dimension-inconsistent")


@dataclass
class LinearProgram:
    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    c0: float = 0.0

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        if self.a_ub is not None:
            self.a_ub = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
            self.b_ub = np.asarray(self.b_ub, dtype=float)
            if self.a_ub.shape != (self.b_ub.size, n):
                raise ValueError("inequality system dimension-inconsistent")
        if self.a_eq is not None:
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
            self.b_eq = np.asarray(self.b_eq, dtype=float)
            if self.a_eq.shape != (self.b_eq.size, n):
                raise ValueError("equality system dimension-inconsistent")
        self.lo = np.full(n, -np.inf) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds dimension-inconsistent")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass
class ConeProgram:
    core: LinearProgram
    cones: list[SocConstraint] = field(default_factory=list)
    q_quad: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.core.num_vars
        for cone in self.cones:
            cone.check_dims(n)
        if self.q_quad is not None:
            self.q_quad = np.asarray(self.q_quad, dtype=float)
            if self.q_quad.shape != (n, n):
                raise ValueError("quadratic term shape mismatch")
            sym = 0.5 * (self.q_quad + self.q_quad.T)
            # PSD check via Cholesky of the symmetrized matrix plus slack.
            try:
                np.linalg.cholesky(sym + 1e-10 * np.eye(n))
            except np.linalg.LinAlgError:
                raise ValueError("quadratic objective term is not PSD") from None
            self.q_quad = sym

    @property
    def num_vars(self) -> int:
        return self.core.num_vars


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | max-iterations
    x: np.ndarray | None
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _arr(a) -> list | None:
    return None if a is None else np.asarray(a, dtype=float).tolist()


def program_to_json(prog: LinearProgram | ConeProgram) -> str:
    """Dump a problem to the JSON debug format."""
    if isinstance(prog, ConeProgram):
        lp, cones, q = prog.core, prog.cones, prog.q_quad
        kind = "socp"
    else:
        lp, cones, q = prog, [], None
        kind = "lp"
    payload = {
        "kind": kind,
        "c": _arr(lp.c),
        "a_ub": _arr(lp.a_ub),
        "b_ub": _arr(lp.b_ub),
        "a_eq": _arr(lp.a_eq),
        "b_eq": _arr(lp.b_eq),
        "lo": _arr(lp.lo),
        "hi": _arr(lp.hi),
        "c0": lp.c0,
        "cones": [
            {"F": _arr(c.F), "g": _arr(c.g), "d": _arr(c.d), "e": c.e} for c in cones
        ],
        "q_quad": _arr(q),
    }
    return json.dumps(payload, sort_keys=True)


def program_from_json(text: str) -> LinearProgram | ConeProgram:
    """Inverse of program_to_json."""
    data = json.loads(text)
    opt = lambda a: None if a is None else np.asarray(a, dtype=float)
    lp = LinearProgram(
        c=np.asarray(data["c"], dtype=float),
        a_ub=opt(data["a_ub"]),
        b_ub=opt(data["b_ub"]),
        a_eq=opt(data["a_eq"]),
        b_eq=opt(data["b_eq"]),
        lo=opt(data["lo"]),
        hi=opt(data["hi"]),
        c0=float(data.get("c0", 0.0)),
    )
    if data["kind"] == "lp":
        return lp
    cones = [
        SocConstraint(
            F=np.asarray(c["F"], dtype=float),
            g=np.asarray(c["g"], dtype=float),
            d=np.asarray(c["d"], dtype=float),
            e=float(c["e"]),
        )
        for c in data["cones"]
    ]
    return ConeProgram(core=lp, cones=cones, q_quad=opt(data["q_quad"]))
