"""Task generation, delay formulas, per-slot FIFO queues, and delay estimation.

Queues reset at every slot boundary: work not finished within the slot counts
as failed, so there is no cross-slot backlog.  Arrival time at a node is the
slot-relative transmission delay of the vehicle's fragment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

TASK_SIZES_MB = (0.0, 0.5, 1.0, 2.0)
_TOL = 1e-9


class CapacityError(RuntimeError):
    """Admitting a fragment would exceed the node's per-slot compute cap."""


class InfeasibleLinkError(RuntimeError):
    """A positive fraction was routed over a zero-rate link."""


def generate_task_bits(
    num_vehicles: int, total_load_mb: float, rng: np.random.Generator
) -> np.ndarray:
    """Per-vehicle task sizes from {0, 0.5, 1, 2} Mb summing to the target load.

    Random vehicles are upgraded one size step at a time until the total is
    hit, which keeps the discrete size set exact and the mix varied.
    """
    if total_load_mb % 0.5 != 0:
        raise ValueError("total load must be a multiple of 0.5 Mb")
    if total_load_mb > 2.0 * num_vehicles:
        raise ValueError("load target exceeds the maximum assignable total")
    sizes = np.zeros(num_vehicles)
    remaining = total_load_mb
    while remaining > 0:
        if remaining >= 1.0:
            eligible = np.flatnonzero(sizes < 2.0)
        else:
            eligible = np.flatnonzero(sizes < 1.0)
        m = int(eligible[rng.integers(eligible.size)])
        step = 1.0 if (sizes[m] == 1.0 and remaining >= 1.0) else 0.5
        sizes[m] += step
        remaining -= step
    return sizes * 1e6


@dataclass
class TaskBatch:
    task_bits: np.ndarray
    deadline_s: float
    cycles_per_bit: float

    @property
    def total_bits(self) -> float:
        return float(np.sum(self.task_bits))


def compute_delay_s(fraction: float, task_bits: float, cycles_per_bit: float,
                    f_hz: float) -> float:
    """Processing time of a task fraction at frequency f_hz."""
    if f_hz <= 0:
        raise ValueError("compute frequency must be positive")
    if not 0 <= fraction <= 1 + _TOL:
        raise ValueError("fraction must lie in [0, 1]")
    return fraction * task_bits * cycles_per_bit / f_hz


def tx_delay_s(fraction: float, task_bits: float, rate_bps: float) -> float:
    """Transmission time of a task fraction at the given link rate."""
    load = fraction * task_bits
    if load <= 0:
        return 0.0
    if rate_bps <= 0:
        raise InfeasibleLinkError("positive fraction on a zero-rate link")
    return load / rate_bps


def capacity_cap_bits(f_hz: float, dt_s: float, cycles_per_bit: float) -> float:
    """Maximum bits a node can process in one slot."""
    if f_hz < 0 or dt_s < 0 or cycles_per_bit <= 0:
        raise ValueError("arguments must be positive")
    return f_hz * dt_s / cycles_per_bit


def vehicle_slot_delay(local_s: float, uav_branch_s: float | None,
                       bs_branch_s: float | None) -> float:
    """Slot completion time: max over the parallel execution branches."""
    return max(local_s, uav_branch_s or 0.0, bs_branch_s or 0.0)


@dataclass
class QueueState:
    node: str
    compute_hz: float
    capacity_bits: float
    last_completion_s: float = 0.0
    admitted_bits: float = 0.0
    history: dict[float, list[float]] = field(default_factory=dict)

    def reset_slot(self) -> "QueueState":
        return replace(self, last_completion_s=0.0, admitted_bits=0.0)


def load_bucket_mb(task_bits: float) -> float:
    """Nearest discrete task size, used as the history key."""
    mb = task_bits / 1e6
    return min(TASK_SIZES_MB, key=lambda s: abs(s - mb))


def enqueue(queue: QueueState, arrival_s: float, service_s: float,
            bits: float) -> tuple[float, QueueState]:
    """FIFO admission: returns (queue delay, updated queue state).

    Callers submit fragments in (arrival, vehicle id) order; ties are thereby
    broken by vehicle id before this function sees them.
    """
    if arrival_s < -_TOL:
        raise ValueError("arrival before slot start")
    if queue.admitted_bits + bits > queue.capacity_bits + _TOL:
        raise CapacityError(
            f"{queue.node}: admitting {bits:.0f} bits exceeds per-slot cap"
        )
    start = max(arrival_s, queue.last_completion_s)
    delay = start - arrival_s
    new_queue = replace(
        queue,
        last_completion_s=start + service_s,
        admitted_bits=queue.admitted_bits + bits,
    )
    return delay, new_queue


def record_history(queue: QueueState, task_bits: float, delay_s: float) -> None:
    queue.history.setdefault(load_bucket_mb(task_bits), []).append(delay_s)


def estimate_queue_delay(
    queue: QueueState,
    vehicle_load_bits: float,
    iteration_index: int,
    prev_realized_s: float = 0.0,
) -> float:
    """Queue-delay estimate feeding the offloading LP.

    Iteration 0 uses the load-keyed historical average (0 with no history);
    later iterations reuse the delay realized by the previous LP solution.
    """
    if iteration_index > 0:
        return prev_realized_s
    samples = queue.history.get(load_bucket_mb(vehicle_load_bits), [])
    return float(np.mean(samples)) if samples else 0.0


@dataclass
class QueueEvent:
    slot: int
    node: str
    vehicle: int
    arrival: float
    delay: float
    service: float


def replay_node(
    queue: QueueState,
    fragments: list[tuple[int, float, float, float]],
    slot: int,
) -> tuple[dict[int, float], QueueState, list[QueueEvent]]:
    """Event-driven FIFO replay of one node for one slot.

    fragments: (vehicle_id, arrival_s, service_s, bits).  Returns per-vehicle
    queue delays, the updated queue, and the trace events.
    """
    q = queue.reset_slot()
    delays: dict[int, float] = {}
    events: list[QueueEvent] = []
    for vid, arrival, service, bits in sorted(fragments, key=lambda f: (f[1], f[0])):
        delay, q = enqueue(q, arrival, service, bits)
        delays[vid] = delay
        events.append(QueueEvent(slot, q.node, vid, arrival, delay, service))
    return delays, q, events
