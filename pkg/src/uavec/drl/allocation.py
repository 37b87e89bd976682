"""State construction and the action -> resource-allocation mapping.

The agent emits two numbers per vehicle: a normalized transmit power and a
scheduling priority.  The environment turns priorities into integer resource
block quotas (proportional with a one-block floor and largest-remainder
rounding) and then assigns concrete block indices greedily by each link's
per-block channel gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

V2I, V2U = "v2i", "v2u"
_LINK_RANK = {V2I: 0, V2U: 1}


@dataclass
class ResourceAllocation:
    num_vehicles: int
    total_rbs: int
    rb_v2i: list[list[int]] = field(default_factory=list)
    rb_v2u: list[list[int]] = field(default_factory=list)
    power_v2i_dbm: np.ndarray = None
    power_v2u_dbm: np.ndarray = None

    def __post_init__(self):
        if not self.rb_v2i:
            self.rb_v2i = [[] for _ in range(self.num_vehicles)]
        if not self.rb_v2u:
            self.rb_v2u = [[] for _ in range(self.num_vehicles)]
        if self.power_v2i_dbm is None:
            self.power_v2i_dbm = np.zeros(self.num_vehicles)
        if self.power_v2u_dbm is None:
            self.power_v2u_dbm = np.zeros(self.num_vehicles)

    def indices(self, vehicle: int, link: str) -> list[int]:
        return self.rb_v2i[vehicle] if link == V2I else self.rb_v2u[vehicle]

    def power_dbm(self, vehicle: int, link: str) -> float:
        arr = self.power_v2i_dbm if link == V2I else self.power_v2u_dbm
        return float(arr[vehicle])

    def set_power(self, vehicle: int, link: str, value: float) -> None:
        arr = self.power_v2i_dbm if link == V2I else self.power_v2u_dbm
        arr[vehicle] = value

    def rb_count(self, vehicle: int, link: str) -> int:
        return len(self.indices(vehicle, link))

    def total_assigned(self) -> int:
        return sum(len(r) for r in self.rb_v2i) + sum(len(r) for r in self.rb_v2u)

    def all_indices(self) -> list[int]:
        out: list[int] = []
        for r in self.rb_v2i:
            out.extend(r)
        for r in self.rb_v2u:
            out.extend(r)
        return out

    def copy(self) -> "ResourceAllocation":
        return ResourceAllocation(
            self.num_vehicles,
            self.total_rbs,
            [list(r) for r in self.rb_v2i],
            [list(r) for r in self.rb_v2u],
            self.power_v2i_dbm.copy(),
            self.power_v2u_dbm.copy(),
        )

    def check_invariants(self, p_min_dbm: float, p_max_dbm: float,
                         active_links: set[tuple[int, str]] | None = None) -> None:
        """Raise AssertionError on any violated allocation invariant."""
        used = self.all_indices()
        assert len(used) <= self.total_rbs, "assigned more RBs than exist"
        assert len(used) == len(set(used)), "RB indices not disjoint across links"
        assert all(0 <= i < self.total_rbs for i in used), "RB index out of range"
        tol = 1e-9
        for m in range(self.num_vehicles):
            if self.rb_v2i[m]:
                assert p_min_dbm - tol <= self.power_v2i_dbm[m] <= p_max_dbm + tol
            if self.rb_v2u[m]:
                assert p_min_dbm - tol <= self.power_v2u_dbm[m] <= p_max_dbm + tol
        if active_links is not None:
            for m, link in active_links:
                assert self.rb_count(m, link) >= 1, f"active link ({m},{link}) has 0 RBs"


def build_state(
    loads_bits: np.ndarray,
    pathloss_v2i_db: np.ndarray,
    pathloss_v2u_db: np.ndarray,
    covered: np.ndarray,
    load_norm_bits: float = 2e6,
) -> np.ndarray:
    """Per-vehicle (load, v2i quality, v2u quality, coverage) in [0, 1].

    Channel quality maps mean path loss through (150 - pl) / 100, clamped;
    uncovered vehicles report zero v2u quality.
    """
    m = loads_bits.size
    state = np.zeros(4 * m)
    q_v2i = np.clip((150.0 - pathloss_v2i_db) / 100.0, 0.0, 1.0)
    q_v2u = np.clip((150.0 - pathloss_v2u_db) / 100.0, 0.0, 1.0)
    state[0::4] = np.clip(loads_bits / load_norm_bits, 0.0, 1.0)
    state[1::4] = q_v2i
    state[2::4] = np.where(covered, q_v2u, 0.0)
    state[3::4] = covered.astype(float)
    return state


def map_action_to_allocation(
    action: np.ndarray,
    active_links: list[tuple[int, str]],
    total_rbs: int,
    gains: dict[str, np.ndarray],
    p_min_dbm: float,
    p_max_dbm: float,
    num_vehicles: int,
) -> ResourceAllocation:
    """Turn the agent's (power, priority) pairs into an RB allocation.

    active_links lists (vehicle, link) pairs that carry traffic this slot.
    gains maps link kind to an (M, total_rbs) linear channel-gain table used
    for the greedy index assignment.  When there are more active links than
    blocks, the lowest-priority links are dropped to zero blocks.
    """
    action = np.asarray(action, dtype=float)
    m = num_vehicles
    alloc = ResourceAllocation(m, total_rbs)
    power = p_min_dbm + action[0::2] * (p_max_dbm - p_min_dbm)
    alloc.power_v2i_dbm = power.copy()
    alloc.power_v2u_dbm = power.copy()
    if not active_links:
        return alloc

    priority = {(v, l): float(action[2 * v + 1]) for v, l in active_links}
    order = sorted(active_links, key=lambda vl: (-priority[vl], vl[0], _LINK_RANK[vl[1]]))
    kept = order[:total_rbs]  # lowest-priority links beyond capacity get 0 RBs

    weights = np.array([priority[vl] for vl in kept])
    total_w = weights.sum()
    shares = total_rbs * (weights / total_w if total_w > 0 else np.full(len(kept), 1.0 / len(kept)))
    quotas = np.maximum(1, np.floor(shares).astype(int))
    remainders = shares - np.floor(shares)

    # The one-block floor can oversubscribe; shave the largest quotas first.
    while quotas.sum() > total_rbs:
        candidates = np.flatnonzero(quotas > 1)
        i = candidates[np.argmax(quotas[candidates])]
        quotas[i] -= 1
    # Hand leftover blocks to the largest fractional remainders
    # (ties: lower vehicle id, then v2i before v2u).
    leftover = total_rbs - int(quotas.sum())
    if leftover > 0:
        rank = sorted(
            range(len(kept)),
            key=lambda i: (-remainders[i], kept[i][0], _LINK_RANK[kept[i][1]]),
        )
        for i in rank[:leftover]:
            quotas[i] += 1

    # Greedy index assignment in priority order: each link takes its quota of
    # best remaining blocks under its own gain table.
    available = np.ones(total_rbs, dtype=bool)
    for (vehicle, link), quota in zip(kept, quotas):
        link_gains = gains[link][vehicle]
        candidates = np.flatnonzero(available)
        ranked = candidates[np.lexsort((candidates, -link_gains[candidates]))]
        chosen = sorted(int(i) for i in ranked[:quota])
        if link == V2I:
            alloc.rb_v2i[vehicle] = chosen
        else:
            alloc.rb_v2u[vehicle] = chosen
        available[chosen] = False
    return alloc
