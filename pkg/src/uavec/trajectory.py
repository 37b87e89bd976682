"""Per-UAV convex trajectory subproblems and the sequential planning loop.

Each UAV solves a small SOCP over its next position: a load-weighted coverage
reward (relaxed hard indicators with slack), an altitude penalty, and a
convexified motion-energy cost, subject to per-slot kinematic limits and one
tangent half-plane per peer UAV that keeps the swarm outside every d_min
keep-out disk.  UAVs solve in sequence; vehicles covered by an earlier UAV are
masked out of later subproblems.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, TrajectoryConfig
from .scenario import UavState, VehicleState, coverage_indicator, validate_uav_motion
from .solver import ConeProgram, LinearProgram, SocConstraint, solve_socp

log = logging.getLogger(__name__)

_SAFETY_TOL = 1e-6


def tangent_halfplane(
    p_self: np.ndarray, p_other: np.ndarray, d_min: float
) -> tuple[float, float, float]:
    """Half-plane a*x + b*y + c <= 0 separating p_self from p_other's disk.

    The boundary is perpendicular to the segment p_other -> p_self at distance
    d_min from p_other, so the closed half-plane containing p_self excludes
    the open d_min-disk around p_other.
    """
    diff = np.asarray(p_self, dtype=float)[:2] - np.asarray(p_other, dtype=float)[:2]
    dist = float(np.linalg.norm(diff))
    if dist < 1e-12:
        raise ValueError("coincident UAV positions: tangent plane undefined")
    u = diff / dist
    q = np.asarray(p_other, dtype=float)[:2] + d_min * u
    # u . (x - q) >= 0  rewritten as  -u . x + u . q <= 0.
    return (-u[0], -u[1], float(u @ q))


@dataclass
class EnergyTerms:
    """Convex motion-energy objective pieces around the previous position."""

    q_xy: float          # quadratic coefficient on x and y
    lin_x: float
    lin_y: float
    const: float
    climb_cost: float    # coefficient on [dz]+
    descent_cost: float  # coefficient on [-dz]+

    def value(self, pos: np.ndarray, prev: np.ndarray) -> float:
        dxy2 = (pos[0] - prev[0]) ** 2 + (pos[1] - prev[1]) ** 2
        dz = float(pos[2]) - float(prev[2])
        return (
            self.q_xy * dxy2
            + self.climb_cost * max(dz, 0.0)
            + self.descent_cost * max(-dz, 0.0)
        )


def convex_energy_terms(prev_pos: np.ndarray, tcfg: TrajectoryConfig) -> EnergyTerms:
    q = tcfg.w_eng * tcfg.c_xy
    return EnergyTerms(
        q_xy=q,
        lin_x=-2.0 * q * float(prev_pos[0]),
        lin_y=-2.0 * q * float(prev_pos[1]),
        const=q * (float(prev_pos[0]) ** 2 + float(prev_pos[1]) ** 2),
        climb_cost=tcfg.w_eng * tcfg.c_up,
        descent_cost=tcfg.w_eng * tcfg.c_down,
    )


@dataclass
class SubproblemLayout:
    vehicle_ids: list[int]
    n_vars: int
    idx_s: int  # start of the s block; r and N follow


def linear_bound_constant(cfg: ScenarioConfig) -> float:
    """Smallest big-M making the coverage cone vacuous at s = 0: the diagonal."""
    return math.hypot(cfg.uav_x_max - cfg.uav_x_min, cfg.uav_y_max - cfg.uav_y_min)


def build_uav_subproblem(
    uav: UavState,
    local_vehicles: list[VehicleState],
    peer_positions: list[np.ndarray],
    cfg: ScenarioConfig,
    tcfg: TrajectoryConfig,
) -> tuple[ConeProgram, SubproblemLayout]:
    """Assemble the SOCP for one UAV's next position.

    Variables: [x, y, z, z_up, z_dn] then per local vehicle (s_j, r_j, N_j).
    peer_positions are the horizontal positions against which tangent
    half-planes are generated (committed positions for already-placed peers,
    previous positions for pending ones).
    """
    prev = uav.prev_position
    j_count = len(local_vehicles)
    n = 5 + 3 * j_count
    idx_s, idx_r, idx_n = 5, 5 + j_count, 5 + 2 * j_count
    m_lin = linear_bound_constant(cfg)
    tan_theta = math.tan(cfg.theta_max_rad)
    eng = convex_energy_terms(prev, tcfg)

    c = np.zeros(n)
    c[0], c[1] = eng.lin_x, eng.lin_y
    c[2] = tcfg.beta3
    c[3], c[4] = eng.climb_cost, eng.descent_cost
    c[idx_r : idx_r + j_count] = tcfg.beta1
    c[idx_n : idx_n + j_count] = tcfg.beta2
    q_quad = np.zeros((n, n))
    q_quad[0, 0] = q_quad[1, 1] = eng.q_xy

    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    lo[0], hi[0] = cfg.uav_x_min, cfg.uav_x_max
    lo[1], hi[1] = cfg.uav_y_min, cfg.uav_y_max
    lo[2] = max(cfg.uav_z_min, float(prev[2]) - cfg.l_max_v_m)
    hi[2] = min(cfg.uav_z_max, float(prev[2]) + cfg.l_max_v_m)
    lo[3], hi[3] = 0.0, cfg.l_max_v_m
    lo[4], hi[4] = 0.0, cfg.l_max_v_m
    lo[idx_s : idx_s + j_count] = 0.0
    hi[idx_s : idx_s + j_count] = 1.0
    lo[idx_r : idx_r + j_count] = tcfg.r_min
    hi[idx_r : idx_r + j_count] = 0.0
    lo[idx_n : idx_n + j_count] = 0.0
    hi[idx_n : idx_n + j_count] = tcfg.n_max_m

    # z - z_up + z_dn = z_prev splits the altitude change into its signed parts.
    a_eq = np.zeros((1, n))
    a_eq[0, 2], a_eq[0, 3], a_eq[0, 4] = 1.0, -1.0, 1.0
    b_eq = np.array([float(prev[2])])

    rows, rhs = [], []
    for j, veh in enumerate(local_vehicles):
        # Load-weighted slack: r_j >= -s_j * (2 D_j)^2 with D_j in Mb units.
        d_mb = veh.task_bits / 1e6
        row = np.zeros(n)
        row[idx_s + j] = -((2.0 * d_mb) ** 2)
        row[idx_r + j] = -1.0
        rows.append(row)
        rhs.append(0.0)
    for peer in peer_positions:
        a, b, c_off = tangent_halfplane(prev, peer, cfg.d_min_m)
        row = np.zeros(n)
        row[0], row[1] = a, b
        rows.append(row)
        rhs.append(-c_off)
    a_ub = np.vstack(rows) if rows else None
    b_ub = np.asarray(rhs) if rows else None

    cones = []
    for j, veh in enumerate(local_vehicles):
        f = np.zeros((2, n))
        f[0, 0] = f[1, 1] = 1.0
        d = np.zeros(n)
        d[2] = tan_theta
        d[idx_s + j] = -m_lin
        d[idx_n + j] = 1.0
        cones.append(SocConstraint(F=f, g=-veh.position, d=d, e=m_lin))
    # Horizontal per-slot displacement cap.
    f = np.zeros((2, n))
    f[0, 0] = f[1, 1] = 1.0
    cones.append(SocConstraint(F=f, g=-prev[:2].astype(float), d=np.zeros(n),
                               e=cfg.l_max_h_m))
    # Speed cap over the full 3D displacement.
    f3 = np.zeros((3, n))
    f3[0, 0] = f3[1, 1] = f3[2, 2] = 1.0
    cones.append(SocConstraint(F=f3, g=-prev.astype(float), d=np.zeros(n),
                               e=cfg.uav_v_max_mps * cfg.slot_duration_s))

    core = LinearProgram(c=c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq,
                         lo=lo, hi=hi, c0=eng.const)
    prog = ConeProgram(core=core, cones=cones, q_quad=q_quad)
    return prog, SubproblemLayout([v.id for v in local_vehicles], n, idx_s)


def subproblem_position_cost(
    pos: np.ndarray,
    prev: np.ndarray,
    local_vehicles: list[VehicleState],
    cfg: ScenarioConfig,
    tcfg: TrajectoryConfig,
) -> float:
    """Objective value at a fixed position with auxiliaries minimized exactly.

    For fixed (x, y, z) the optimal (s_j, r_j, N_j) solve a piecewise-linear
    one-dimensional problem per vehicle whose minimum sits at a breakpoint.
    Used as the grid-search oracle against the SOCP.
    """
    m_lin = linear_bound_constant(cfg)
    radius = float(pos[2]) * math.tan(cfg.theta_max_rad)
    eng = convex_energy_terms(prev, tcfg)
    total = tcfg.beta3 * float(pos[2]) + eng.value(pos, prev)
    for veh in local_vehicles:
        d_mb = veh.task_bits / 1e6
        dist = float(np.linalg.norm(np.asarray(pos[:2]) - veh.position))
        coef = (2.0 * d_mb) ** 2

        def cost_at(s: float) -> float:
            slack = dist - radius - m_lin * (1.0 - s)
            n_j = max(0.0, slack)
            if n_j > tcfg.n_max_m + 1e-12:
                return math.inf
            r_j = max(tcfg.r_min, -s * coef)
            return tcfg.beta1 * r_j + tcfg.beta2 * n_j

        candidates = {0.0, 1.0}
        if m_lin > 0:
            candidates.add(min(1.0, max(0.0, (m_lin + radius - dist) / m_lin)))
            candidates.add(min(1.0, max(0.0, (tcfg.n_max_m + m_lin + radius - dist) / m_lin)))
        if coef > 0:
            candidates.add(min(1.0, max(0.0, -tcfg.r_min / coef)))
        total += min(cost_at(s) for s in candidates)
    return total


def plan_all_trajectories(
    uavs: list[UavState],
    vehicles: list[VehicleState],
    cfg: ScenarioConfig,
    tcfg: TrajectoryConfig,
    order: list[int] | None = None,
    tol: float = 1e-7,
) -> list[UavState]:
    """Sequentially solve every UAV's subproblem with cooperative masking.

    Returns updated UAV states (prev_position = old position, position = new,
    served_vehicles disjoint across UAVs).  A solver failure or a safety check
    failure makes that UAV hold position.
    """
    order = list(range(len(uavs))) if order is None else list(order)
    masked: set[int] = set()
    committed: dict[int, np.ndarray] = {}
    new_states: dict[int, UavState] = {}
    for rank, ui in enumerate(order):
        uav = uavs[ui]
        prev = uav.position.astype(float)
        planning_state = UavState(uav.id, prev, prev, uav.compute_hz)
        local = [
            v for v in vehicles
            if v.id not in masked
            and np.linalg.norm(v.position - prev[:2]) <= cfg.sensing_range_m
        ]
        peers = [
            committed[other] if other in committed else uavs[other].position[:2]
            for other in order
            if other != ui
        ]
        prog, _layout = build_uav_subproblem(planning_state, local, peers, cfg, tcfg)
        res = solve_socp(prog, tol=tol)
        next_pos = prev.copy()
        if res.status == "optimal":
            cand = np.array([res.x[0], res.x[1], res.x[2]])
            # Clip solver-tolerance spill before the hard feasibility check.
            cand[0] = min(max(cand[0], cfg.uav_x_min), cfg.uav_x_max)
            cand[1] = min(max(cand[1], cfg.uav_y_min), cfg.uav_y_max)
            cand[2] = min(max(cand[2], cfg.uav_z_min), cfg.uav_z_max)
            violation = validate_uav_motion(prev, cand, cfg)
            safe = violation is None and all(
                np.linalg.norm(cand[:2] - np.asarray(peer)[:2]) >= cfg.d_min_m - _SAFETY_TOL
                for peer in peers
            )
            if safe:
                next_pos = cand
            else:
                log.warning("uav %d: candidate rejected (%s), holding position",
                            uav.id, violation or "separation")
        else:
            log.warning("uav %d: solver status %s, holding position", uav.id, res.status)
        committed[ui] = next_pos[:2]
        served = {
            v.id for v in vehicles
            if v.id not in masked and coverage_indicator(next_pos, v.position, cfg.theta_max_rad)
        }
        masked |= served
        new_states[ui] = UavState(uav.id, next_pos, prev, uav.compute_hz, served)
    return [new_states[i] for i in range(len(uavs))]


def coverage_metric(
    uavs: list[UavState],
    vehicles: list[VehicleState],
    flight_energy_j: float,
    omega_h: float,
    omega_e: float,
    theta_max: float,
) -> float:
    """Covered-vehicle count minus weighted altitude and flight-energy penalties."""
    covered = sum(
        1
        for v in vehicles
        if any(coverage_indicator(u.position, v.position, theta_max) for u in uavs)
    )
    altitude_sum = sum(u.z for u in uavs)
    return covered - omega_h * altitude_sum - omega_e * flight_energy_j
