"""Road network, vehicle mobility, UAV kinematics, and coverage geometry.

The road layout is a fixed grid of 4 horizontal and 4 vertical lanes,
uniformly spaced, with travel directions alternating lane by lane.  Vehicles
advance along their lane each slot, turn uniformly at random when they pass an
intersection, and wrap to the opposite end of the lane when they leave the
area so the vehicle count stays constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, ScenarioConfig

_TOL = 1e-9
LANES_PER_AXIS = 4


@dataclass(frozen=True)
class LaneSegment:
    axis: str  # "h" (varies in x) or "v" (varies in y)
    offset: float  # fixed coordinate of the lane
    direction: int  # +1 or -1 along the varying coordinate


@dataclass(frozen=True)
class RoadNetwork:
    area_size_m: float
    h_lanes: tuple[LaneSegment, ...]
    v_lanes: tuple[LaneSegment, ...]

    @property
    def lanes(self) -> tuple[LaneSegment, ...]:
        return self.h_lanes + self.v_lanes

    def crossing_offsets(self, axis: str) -> tuple[float, ...]:
        # Intersections seen by a lane of `axis` are the offsets of the
        # perpendicular lanes.
        other = self.v_lanes if axis == "h" else self.h_lanes
        return tuple(lane.offset for lane in other)


@dataclass
class VehicleState:
    id: int
    x: float
    y: float
    speed_mps: float
    heading: tuple[int, int]  # unit direction along the current lane
    lane_axis: str
    lane_offset: float
    task_bits: float = 0.0
    deadline_s: float = 1.0
    shadow_db: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class UavState:
    id: int
    position: np.ndarray  # (x, y, z)
    prev_position: np.ndarray
    compute_hz: float
    served_vehicles: set[int] = field(default_factory=set)

    @property
    def xy(self) -> np.ndarray:
        return self.position[:2]

    @property
    def z(self) -> float:
        return float(self.position[2])


def build_road_network(cfg: ScenarioConfig) -> RoadNetwork:
    spacing = cfg.area_size_m / LANES_PER_AXIS
    offsets = [(i + 0.5) * spacing for i in range(LANES_PER_AXIS)]
    h = tuple(LaneSegment("h", off, 1 if i % 2 == 0 else -1) for i, off in enumerate(offsets))
    v = tuple(LaneSegment("v", off, 1 if i % 2 == 0 else -1) for i, off in enumerate(offsets))
    return RoadNetwork(cfg.area_size_m, h, v)


def truncated_gaussian_speed(cfg: ScenarioConfig, rng: np.random.Generator) -> float:
    """Rejection-sample a speed from N(mean, std) truncated to [min, max]."""
    while True:
        v = rng.normal(cfg.speed_mean_mps, cfg.speed_std_mps)
        if cfg.speed_min_mps <= v <= cfg.speed_max_mps:
            return float(v)


def _lane_position(lane: LaneSegment, along: float) -> tuple[float, float]:
    if lane.axis == "h":
        return along, lane.offset
    return lane.offset, along


def _heading(lane: LaneSegment) -> tuple[int, int]:
    if lane.axis == "h":
        return (lane.direction, 0)
    return (0, lane.direction)


def init_scenario(
    cfg: ScenarioConfig, rng: np.random.Generator, uav_compute_hz: float = 5e9
) -> tuple[RoadNetwork, list[VehicleState], list[UavState]]:
    """Place vehicles uniformly on lanes and UAVs on a centered regular polygon."""
    cfg.validate()
    net = build_road_network(cfg)
    vehicles = []
    for m in range(cfg.num_vehicles):
        lane = net.lanes[rng.integers(len(net.lanes))]
        along = float(rng.uniform(0.0, cfg.area_size_m))
        x, y = _lane_position(lane, along)
        vehicles.append(
            VehicleState(
                id=m,
                x=x,
                y=y,
                speed_mps=truncated_gaussian_speed(cfg, rng),
                heading=_heading(lane),
                lane_axis=lane.axis,
                lane_offset=lane.offset,
            )
        )

    uavs = []
    if cfg.num_uavs > 0:
        cx = 0.5 * (cfg.uav_x_min + cfg.uav_x_max)
        cy = 0.5 * (cfg.uav_y_min + cfg.uav_y_max)
        span = min(cfg.uav_x_max - cfg.uav_x_min, cfg.uav_y_max - cfg.uav_y_min)
        radius = span / 4.0
        if cfg.num_uavs > 1:
            side = 2.0 * radius * math.sin(math.pi / cfg.num_uavs)
            if side + _TOL < cfg.d_min_m:
                raise ConfigError(
                    f"cannot seed {cfg.num_uavs} UAVs with d_min={cfg.d_min_m} m "
                    f"inside the flight area"
                )
        for u in range(cfg.num_uavs):
            ang = 2.0 * math.pi * u / cfg.num_uavs
            pos = np.array([
                cx + (radius if cfg.num_uavs > 1 else 0.0) * math.cos(ang),
                cy + (radius if cfg.num_uavs > 1 else 0.0) * math.sin(ang),
                cfg.uav_z_min,
            ])
            uavs.append(UavState(id=u, position=pos, prev_position=pos.copy(),
                                 compute_hz=uav_compute_hz))
    return net, vehicles, uavs


def _advance_on_lane(
    net: RoadNetwork,
    lane: LaneSegment,
    along: float,
    distance: float,
    rng: np.random.Generator,
) -> tuple[LaneSegment, float]:
    """Move `distance` forward, turning uniformly at each crossed intersection."""
    area = net.area_size_m
    while distance > _TOL:
        crossings = net.crossing_offsets(lane.axis)
        # Nearest intersection strictly ahead on this lane.
        ahead = [
            (c - along) * lane.direction
            for c in crossings
            if (c - along) * lane.direction > _TOL
        ]
        to_next = min(ahead) if ahead else math.inf
        to_edge = (area - along) if lane.direction > 0 else along
        step = min(distance, to_next, to_edge)
        along += lane.direction * step
        distance -= step
        if distance <= _TOL:
            break
        if to_next <= to_edge and math.isfinite(to_next):
            # At an intersection: keep straight or turn onto the crossing lane.
            cross_axis = "v" if lane.axis == "h" else "h"
            candidates = [lane] + [
                other
                for other in (net.v_lanes if cross_axis == "v" else net.h_lanes)
                if abs(other.offset - along) < _TOL
            ]
            lane_choice = candidates[rng.integers(len(candidates))]
            if lane_choice is not lane:
                crossing_coord = lane.offset
                lane = lane_choice
                along = crossing_coord
        else:
            # Left the area: wrap to the opposite end of the same lane.
            along = 0.0 if lane.direction > 0 else area
    # Wrap exact-boundary positions so coordinates stay in [0, area].
    if along < 0.0 or along > area:
        along = along % area
    return lane, along


def step_vehicles(
    net: RoadNetwork,
    vehicles: list[VehicleState],
    dt: float,
    rng: np.random.Generator,
) -> list[VehicleState]:
    """Advance every vehicle by speed*dt along its lane."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    out = []
    for veh in vehicles:
        lane = LaneSegment(veh.lane_axis, veh.lane_offset, veh.heading[0] or veh.heading[1])
        along = veh.x if veh.lane_axis == "h" else veh.y
        lane, along = _advance_on_lane(net, lane, along, veh.speed_mps * dt, rng)
        x, y = _lane_position(lane, along)
        out.append(
            replace(
                veh,
                x=x,
                y=y,
                heading=_heading(lane),
                lane_axis=lane.axis,
                lane_offset=lane.offset,
            )
        )
    return out


def coverage_radius(z_u: float, theta_max: float) -> float:
    """Horizontal coverage radius of a UAV at altitude z_u."""
    if theta_max >= math.pi / 2:
        raise ValueError("theta_max must be below pi/2")
    if z_u < 0:
        raise ValueError("altitude must be nonnegative")
    return z_u * math.tan(theta_max)


def coverage_indicator(uav_pos: np.ndarray, vehicle_xy: np.ndarray, theta_max: float) -> int:
    """1 iff the vehicle lies within the UAV's horizontal coverage disk."""
    radius = coverage_radius(float(uav_pos[2]), theta_max)
    d = float(np.hypot(uav_pos[0] - vehicle_xy[0], uav_pos[1] - vehicle_xy[1]))
    return 1 if d <= radius + _TOL else 0


def validate_uav_motion(
    prev_pos: np.ndarray, next_pos: np.ndarray, cfg: ScenarioConfig
) -> str | None:
    """None when the move is feasible, else the first violated constraint tag."""
    x, y, z = float(next_pos[0]), float(next_pos[1]), float(next_pos[2])
    if not (
        cfg.uav_x_min - _TOL <= x <= cfg.uav_x_max + _TOL
        and cfg.uav_y_min - _TOL <= y <= cfg.uav_y_max + _TOL
        and cfg.uav_z_min - _TOL <= z <= cfg.uav_z_max + _TOL
    ):
        return "bounds"
    dxy = math.hypot(x - prev_pos[0], y - prev_pos[1])
    if dxy > cfg.l_max_h_m + _TOL:
        return "horizontal"
    dz = abs(z - prev_pos[2])
    if dz > cfg.l_max_v_m + _TOL:
        return "vertical"
    speed = math.sqrt(dxy * dxy + dz * dz) / cfg.slot_duration_s
    if speed > cfg.uav_v_max_mps + _TOL:
        return "speed"
    return None


def min_pairwise_distance(uavs: list[UavState]) -> float:
    """Smallest horizontal separation over UAV pairs (inf for < 2 UAVs)."""
    best = math.inf
    for i in range(len(uavs)):
        for j in range(i + 1, len(uavs)):
            best = min(best, float(np.linalg.norm(uavs[i].xy - uavs[j].xy)))
    return best


def select_serving_uav(
    covering_ids: list[int],
    loads_bits: dict[int, float],
    counts: dict[int, int],
    pathloss_db: dict[int, float],
    lam1: float,
    lam2: float,
    task_bits_max: float = 2e6,
    pathloss_norm_db: float = 120.0,
) -> int | None:
    """Pick the covering UAV minimizing the channel- and load-aware cost.

    Load is normalized by the worst-case backlog of the UAV's covered set and
    path loss by a fixed reference so the two terms are comparable before the
    lambda weights are applied.
    """
    if not covering_ids:
        return None
    best_id, best_cost = None, math.inf
    for uid in covering_ids:
        denom = task_bits_max * max(1, counts.get(uid, 0))
        load_norm = loads_bits.get(uid, 0.0) / denom
        cost = lam1 * load_norm + lam2 * pathloss_db[uid] / pathloss_norm_db
        if cost < best_cost - 1e-15 or (abs(cost - best_cost) <= 1e-15 and (best_id is None or uid < best_id)):
            best_id, best_cost = uid, cost
    return best_id
