"""Per-slot pipeline and episode driver.

Each slot runs, in order: task arrival, sequential trajectory planning,
channel refresh, serving-UAV selection, agent action and its mapping to a
resource allocation, a first offload solve (whose cost is the agent's reward
and whose completion estimates feed the macro-scheduler), macro-adjustment,
a second offload solve, an event-driven queue replay that yields realized
delays, transition storage, and one learning step.  Rewards always come from
the first solve so external adjustments never bias the policy gradient.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channel as ch
from .config import ExperimentConfig
from .drl import (
    DdpgAgent,
    ResourceAllocation,
    Transition,
    V2I,
    V2U,
    build_state,
    compute_reward,
    map_action_to_allocation,
)
from .energy import EnergyBreakdown, system_objective, uav_slot_energy_j
from .offload import OffloadPlan, VehicleOffloadInput, plan_cost, solve_offload
from .scenario import (
    UavState,
    VehicleState,
    coverage_indicator,
    init_scenario,
    select_serving_uav,
    step_vehicles,
)
from .scheduler import MacroScheduler, ProjectionContext, TaskOutcome, classify_tasks
from .tasks_queue import (
    QueueEvent,
    QueueState,
    capacity_cap_bits,
    generate_task_bits,
    record_history,
    replay_node,
    vehicle_slot_delay,
)
from .trajectory import coverage_metric, plan_all_trajectories

log = logging.getLogger(__name__)

METRICS_SCHEMA_VERSION = "uavec-metrics-v1"

STAGES = (
    "tasks",
    "trajectory",
    "channel",
    "state",
    "action",
    "allocation",
    "lp1",
    "qhat_update_1",
    "classify",
    "scheduler",
    "lp2",
    "qhat_update_2",
    "replay",
    "store",
    "learn",
    "mobility",
)


@dataclass
class SlotMetrics:
    slot: int
    objective: float          # replayed-delay objective of the final plan
    objective_lp: float       # LP-estimated objective of the final plan
    psi_drl: float            # LP#1 cost (the negated stored reward)
    psi_final: float          # LP#2 cost
    delay_sum_s: float
    norm_delay: float
    flight_j: float
    compute_j: float
    comm_j: float
    energy_weighted: float
    success_rate: float
    r_t: float
    n_failed: int
    n_surplus: int
    n_actions_applied: int


@dataclass
class SlotRecord:
    """Raw per-slot artifacts kept for audits and the acceptance suite."""

    metrics: SlotMetrics
    reward: float
    plan1: OffloadPlan
    plan2: OffloadPlan
    inputs1: list[VehicleOffloadInput]
    inputs2: list[VehicleOffloadInput]
    flight_j: float
    allocation: ResourceAllocation
    replayed_delay_s: np.ndarray
    deadlines_s: np.ndarray
    task_bits: np.ndarray
    bs_admitted_bits: float
    uav_admitted_bits: dict[int, float]
    stages: list[str]
    queue_events: list[QueueEvent]
    uav_snapshot: list[tuple] = field(default_factory=list)


class Simulation:
    """Owns all mutable state across slots of one episode."""

    def __init__(self, cfg: ExperimentConfig, scheduler_mode: str = "rule",
                 train: bool = True, endpoint=None):
        cfg.validate()
        self.cfg = cfg
        self.train = train
        seq = np.random.SeedSequence(cfg.scenario.seed)
        streams = seq.spawn(9)
        names = ("init", "tasks", "mobility", "shadow", "fade_v2i", "fade_v2u",
                 "agent", "explore", "sample")
        self.rng = {n: np.random.default_rng(s) for n, s in zip(names, streams)}

        self.net, self.vehicles, self.uavs = init_scenario(
            cfg.scenario, self.rng["init"], uav_compute_hz=cfg.tasks.uav_hz)
        # Fresh shadow-fading draw per vehicle (infinite decorrelation step).
        for v in self.vehicles:
            v.shadow_db = ch.update_shadow(0.0, 1e12, cfg.channel, self.rng["shadow"])
            v.deadline_s = cfg.tasks.deadline_s

        m = cfg.scenario.num_vehicles
        self.agent = DdpgAgent(4 * m, 2 * m, cfg.agent, self.rng["agent"])
        self.scheduler = MacroScheduler(scheduler_mode, endpoint,
                                        cfg.scheduler.max_actions)
        cap_bs = capacity_cap_bits(cfg.tasks.bs_hz, cfg.scenario.slot_duration_s,
                                   cfg.tasks.cycles_per_bit)
        cap_uav = capacity_cap_bits(cfg.tasks.uav_hz, cfg.scenario.slot_duration_s,
                                    cfg.tasks.cycles_per_bit)
        self.bs_queue = QueueState("bs", cfg.tasks.bs_hz, cap_bs)
        self.uav_queues = {u.id: QueueState(f"uav{u.id}", cfg.tasks.uav_hz, cap_uav)
                           for u in self.uavs}
        self.qhat_bs = np.zeros(m)
        self.qhat_uav = np.zeros(m)
        self.pending: tuple[np.ndarray, np.ndarray, float] | None = None
        self.slot_index = 0

    # ------------------------------------------------------------------
    def _channel_tables(self):
        """Per-slot deterministic path losses and per-RB fading gain tables."""
        cfg = self.cfg
        m = cfg.scenario.num_vehicles
        n_rb = cfg.channel.total_rbs
        bs = np.array([cfg.scenario.bs_x, cfg.scenario.bs_y, cfg.scenario.bs_z])
        z_m = cfg.scenario.antenna_height_m
        pl_v2i = np.zeros(m)
        for v in self.vehicles:
            d = math.sqrt((v.x - bs[0]) ** 2 + (v.y - bs[1]) ** 2 + (z_m - bs[2]) ** 2)
            pl_v2i[v.id] = ch.v2i_pathloss_db(d)
        gains_v2i = ch.rayleigh_gains(self.rng["fade_v2i"], (m, n_rb))
        k_lin = ch.db_to_linear(cfg.channel.rician_k_db)
        gains_v2u = ch.rician_gains(k_lin, self.rng["fade_v2u"], (m, n_rb))
        return pl_v2i, gains_v2i, gains_v2u

    def _coverage_and_serving(self):
        """Coverage indicators, per-vehicle serving UAV, mean air path loss."""
        cfg = self.cfg
        m = cfg.scenario.num_vehicles
        covered = np.zeros(m, dtype=bool)
        serving = np.full(m, -1)
        pl_v2u = np.zeros(m)
        z_m = cfg.scenario.antenna_height_m
        cover_sets: dict[int, list[int]] = {u.id: [] for u in self.uavs}
        for v in self.vehicles:
            for u in self.uavs:
                if coverage_indicator(u.position, v.position, cfg.scenario.theta_max_rad):
                    cover_sets[u.id].append(v.id)
        loads = {uid: sum(self.vehicles[i].task_bits for i in ids)
                 for uid, ids in cover_sets.items()}
        counts = {uid: len(ids) for uid, ids in cover_sets.items()}
        for v in self.vehicles:
            covering = [u.id for u in self.uavs if v.id in cover_sets[u.id]]
            if not covering:
                continue
            pls = {}
            for uid in covering:
                u = self.uavs[uid]
                d = math.sqrt(float(np.sum((u.position[:2] - v.position) ** 2))
                              + (u.z - z_m) ** 2)
                pls[uid] = ch.g2a_mean_pathloss_db(d, u.z - z_m, self.cfg.channel)
            chosen = select_serving_uav(
                covering, loads, counts, pls,
                cfg.scenario.serve_lambda1, cfg.scenario.serve_lambda2,
                pathloss_norm_db=cfg.scenario.serve_pathloss_norm_db)
            covered[v.id] = True
            serving[v.id] = chosen
            pl_v2u[v.id] = pls[chosen]
        return covered, serving, pl_v2u

    def _make_rate_fn(self, pl_v2i, pl_v2u, gains_v2i, gains_v2u):
        cfg = self.cfg.channel
        shadows = np.array([v.shadow_db for v in self.vehicles])

        def rate_fn(vehicle: int, link: str, indices, power_dbm: float) -> float:
            count = len(indices)
            if count == 0:
                return 0.0
            if link == V2I:
                fading = ch.mean_gain_db(gains_v2i[vehicle][list(indices)])
                return ch.v2i_rate_bps(count, power_dbm, pl_v2i[vehicle],
                                       shadows[vehicle], fading, cfg)
            fading = ch.mean_gain_db(gains_v2u[vehicle][list(indices)])
            return ch.g2a_rate_bps(count, power_dbm, pl_v2u[vehicle], fading, cfg)

        return rate_fn

    def _offload_inputs(self, alloc: ResourceAllocation, covered, serving,
                        rate_fn) -> list[VehicleOffloadInput]:
        inputs = []
        for v in self.vehicles:
            i = v.id
            uav = int(serving[i]) if covered[i] else None
            inputs.append(VehicleOffloadInput(
                vehicle_id=i,
                task_bits=v.task_bits,
                deadline_s=v.deadline_s,
                serving_uav=uav,
                rate_bs_bps=rate_fn(i, V2I, alloc.rb_v2i[i], alloc.power_v2i_dbm[i]),
                rate_uav_bps=(rate_fn(i, V2U, alloc.rb_v2u[i], alloc.power_v2u_dbm[i])
                              if uav is not None else 0.0),
                power_bs_dbm=float(alloc.power_v2i_dbm[i]),
                power_uav_dbm=float(alloc.power_v2u_dbm[i]),
                queue_est_bs_s=float(self.qhat_bs[i]),
                queue_est_uav_s=float(self.qhat_uav[i]),
            ))
        return inputs

    def _replay(self, plan: OffloadPlan, inputs: list[VehicleOffloadInput],
                slot: int):
        """Event-driven FIFO replay: realized queue delays and completions."""
        cfg = self.cfg
        tol = 1e-9
        bs_frags, uav_frags = [], {u.id: [] for u in self.uavs}
        branch = {}
        for row, inp in zip(plan.rows, inputs):
            i = inp.vehicle_id
            d = inp.task_bits
            local = row.gamma_local * d * cfg.tasks.cycles_per_bit / cfg.tasks.local_hz
            branch[i] = {"local": local, "bs": None, "uav": None}
            if row.gamma_bs > tol and inp.rate_bs_bps > 0:
                arrival = row.gamma_bs * d / inp.rate_bs_bps
                service = row.gamma_bs * d * cfg.tasks.cycles_per_bit / cfg.tasks.bs_hz
                bs_frags.append((i, arrival, service, row.gamma_bs * d))
            if row.gamma_uav > tol and inp.rate_uav_bps > 0 and row.serving_uav is not None:
                arrival = row.gamma_uav * d / inp.rate_uav_bps
                service = row.gamma_uav * d * cfg.tasks.cycles_per_bit / cfg.tasks.uav_hz
                uav_frags[row.serving_uav].append((i, arrival, service, row.gamma_uav * d))

        events: list[QueueEvent] = []
        qd_bs, self.bs_queue, ev = replay_node(self.bs_queue, bs_frags, slot)
        events.extend(ev)
        qd_uav: dict[int, float] = {}
        for uid, frags in uav_frags.items():
            delays, self.uav_queues[uid], ev = replay_node(self.uav_queues[uid], frags, slot)
            events.extend(ev)
            qd_uav.update(delays)

        m = cfg.scenario.num_vehicles
        realized = np.zeros(m)
        for row, inp in zip(plan.rows, inputs):
            i = inp.vehicle_id
            b = branch[i]
            bs_total = uav_total = None
            for frag in bs_frags:
                if frag[0] == i:
                    bs_total = frag[1] + qd_bs[i] + frag[2]
            for uid, frags in uav_frags.items():
                for frag in frags:
                    if frag[0] == i:
                        uav_total = frag[1] + qd_uav[i] + frag[2]
            realized[i] = vehicle_slot_delay(b["local"], uav_total, bs_total)
        bs_admitted = sum(f[3] for f in bs_frags)
        uav_admitted = {uid: sum(f[3] for f in frags) for uid, frags in uav_frags.items()}
        return realized, qd_bs, qd_uav, events, bs_admitted, uav_admitted

    # ------------------------------------------------------------------
    def run_slot(self) -> SlotRecord:
        cfg = self.cfg
        scen = cfg.scenario
        m = scen.num_vehicles
        stages: list[str] = []
        slot = self.slot_index

        # New task arrivals for this slot.
        bits = generate_task_bits(m, cfg.tasks.total_load_mb, self.rng["tasks"])
        for v in self.vehicles:
            v.task_bits = float(bits[v.id])
            v.deadline_s = cfg.tasks.deadline_s
        stages.append("tasks")

        # Sequential trajectory planning with cooperative masking.
        order = list(range(len(self.uavs)))
        if cfg.trajectory.rotate_order and self.uavs:
            shift = slot % len(self.uavs)
            order = order[shift:] + order[:shift]
        self.uavs = plan_all_trajectories(self.uavs, self.vehicles, scen,
                                          cfg.trajectory, order=order)
        flight_j = sum(
            uav_slot_energy_j(u.prev_position, u.position, scen.slot_duration_s,
                              cfg.energy)
            for u in self.uavs
        )
        stages.append("trajectory")

        # Channel refresh and serving selection.
        pl_v2i, gains_v2i, gains_v2u = self._channel_tables()
        covered, serving, pl_v2u = self._coverage_and_serving()
        rate_fn = self._make_rate_fn(pl_v2i, pl_v2u, gains_v2i, gains_v2u)
        stages.append("channel")

        state = build_state(bits, pl_v2i, pl_v2u, covered)
        stages.append("state")

        # Complete last slot's transition now that its successor state exists.
        if self.pending is not None:
            s_prev, a_prev, r_prev = self.pending
            self.agent.buffer.add(Transition(s_prev, a_prev, r_prev, state, False))
            self.pending = None

        action = self.agent.act(state, explore=self.train, rng=self.rng["explore"])
        stages.append("action")

        active_links = []
        for v in self.vehicles:
            if v.task_bits > 0:
                active_links.append((v.id, V2I))
                if covered[v.id]:
                    active_links.append((v.id, V2U))
        gains = {V2I: gains_v2i, V2U: gains_v2u}
        alloc = map_action_to_allocation(
            action, active_links, cfg.channel.total_rbs, gains,
            cfg.channel.p_min_dbm, cfg.channel.p_max_dbm, m)
        stages.append("allocation")

        # First offload solve: the agent's own cost and completion estimates.
        inputs1 = self._offload_inputs(alloc, covered, serving, rate_fn)
        plan1 = solve_offload(inputs1, cfg.tasks, cfg.energy,
                              scen.slot_duration_s, scen.num_uavs)
        psi_drl = plan_cost(plan1, inputs1, cfg.energy, flight_j)
        reward = compute_reward(psi_drl)
        stages.append("lp1")

        # Queue estimates for the second solve come from replaying plan 1.
        _, qd_bs1, qd_uav1, _, _, _ = self._replay(plan1, inputs1, slot)
        self.qhat_bs = np.array([qd_bs1.get(i, 0.0) for i in range(m)])
        self.qhat_uav = np.array([qd_uav1.get(i, 0.0) for i in range(m)])
        stages.append("qhat_update_1")

        outcomes = [
            TaskOutcome(
                vehicle=i,
                completion_s=plan1.rows[i].completion_s,
                deadline_s=inputs1[i].deadline_s,
                rb_v2i=alloc.rb_count(i, V2I),
                rb_v2u=alloc.rb_count(i, V2U),
                power_v2i_dbm=float(alloc.power_v2i_dbm[i]),
                power_v2u_dbm=float(alloc.power_v2u_dbm[i]),
                pathloss_v2i_db=float(pl_v2i[i]),
                pathloss_v2u_db=float(pl_v2u[i]) if covered[i] else 0.0,
            )
            for i in range(m)
            if self.vehicles[i].task_bits > 0
        ]
        threshold = cfg.scheduler.surplus_threshold_frac * cfg.tasks.deadline_s
        failed, surplus, _ = classify_tasks(outcomes, threshold)
        stages.append("classify")

        n_applied = 0
        if failed and self.scheduler.mode != "off":
            ctx = ProjectionContext(
                task_bits=bits,
                deadlines_s=np.array([v.deadline_s for v in self.vehicles]),
                gamma_local=np.array([r.gamma_local for r in plan1.rows]),
                gamma_bs=np.array([r.gamma_bs for r in plan1.rows]),
                gamma_uav=np.array([r.gamma_uav for r in plan1.rows]),
                local_delay_s=np.array([
                    r.gamma_local * i.task_bits * cfg.tasks.cycles_per_bit / cfg.tasks.local_hz
                    for r, i in zip(plan1.rows, inputs1)
                ]),
                fixed_bs_s=np.array([
                    self.qhat_bs[i.vehicle_id]
                    + r.gamma_bs * i.task_bits * cfg.tasks.cycles_per_bit / cfg.tasks.bs_hz
                    for r, i in zip(plan1.rows, inputs1)
                ]),
                fixed_uav_s=np.array([
                    self.qhat_uav[i.vehicle_id]
                    + r.gamma_uav * i.task_bits * cfg.tasks.cycles_per_bit / cfg.tasks.uav_hz
                    for r, i in zip(plan1.rows, inputs1)
                ]),
                rate_fn=rate_fn,
            )
            actions = self.scheduler.propose(
                failed, surplus, alloc, ctx, gains,
                cfg.channel.p_min_dbm, cfg.channel.p_max_dbm, covered)
            from .scheduler import validate_and_apply

            alloc, applied, _rejected = validate_and_apply(
                actions, alloc, gains, cfg.channel.p_min_dbm,
                cfg.channel.p_max_dbm, covered)
            n_applied = len(applied)
        stages.append("scheduler")

        # Second offload solve on the adjusted allocation and fresher queues.
        inputs2 = self._offload_inputs(alloc, covered, serving, rate_fn)
        plan2 = solve_offload(inputs2, cfg.tasks, cfg.energy,
                              scen.slot_duration_s, scen.num_uavs)
        psi_final = plan_cost(plan2, inputs2, cfg.energy, flight_j)
        stages.append("lp2")

        realized, qd_bs2, qd_uav2, events, bs_adm, uav_adm = self._replay(
            plan2, inputs2, slot)
        self.qhat_bs = np.array([qd_bs2.get(i, 0.0) for i in range(m)])
        self.qhat_uav = np.array([qd_uav2.get(i, 0.0) for i in range(m)])
        for i, delay in qd_bs2.items():
            record_history(self.bs_queue, self.vehicles[i].task_bits, delay)
        for i, delay in qd_uav2.items():
            uid = int(serving[i])
            if uid >= 0:
                record_history(self.uav_queues[uid], self.vehicles[i].task_bits, delay)
        stages.append("qhat_update_2")
        stages.append("replay")

        # Metrics use this slot's geometry, so compute them before mobility.
        deadlines = np.array([v.deadline_s for v in self.vehicles])
        loaded = bits > 0
        penalties = np.maximum(0.0, realized - deadlines)
        total_energy = plan2.comm_energy_j + plan2.compute_energy_j + flight_j
        objective = system_objective(realized[loaded], deadlines[loaded],
                                     penalties[loaded], total_energy, cfg.energy)
        breakdown = EnergyBreakdown(flight_j, plan2.compute_energy_j,
                                    plan2.comm_energy_j)
        success = float(np.mean(realized[loaded] <= deadlines[loaded] + 1e-9)) \
            if loaded.any() else 1.0
        r_t = coverage_metric(self.uavs, self.vehicles, flight_j,
                              cfg.trajectory.coverage_omega_h,
                              cfg.trajectory.coverage_omega_e,
                              scen.theta_max_rad)
        uav_snapshot = [
            (u.id, float(u.position[0]), float(u.position[1]), float(u.position[2]),
             u.z * math.tan(scen.theta_max_rad), len(u.served_vehicles))
            for u in self.uavs
        ]

        self.pending = (state, action, reward)
        stages.append("store")

        if self.train:
            self.agent.train_step(self.rng["sample"])
        stages.append("learn")

        self.vehicles = step_vehicles(self.net, self.vehicles,
                                      scen.slot_duration_s, self.rng["mobility"])
        for v in self.vehicles:
            v.shadow_db = ch.update_shadow(
                v.shadow_db, v.speed_mps * scen.slot_duration_s,
                cfg.channel, self.rng["shadow"])
        stages.append("mobility")
        metrics = SlotMetrics(
            slot=slot,
            objective=objective,
            objective_lp=psi_final,
            psi_drl=psi_drl,
            psi_final=psi_final,
            delay_sum_s=float(np.sum(realized[loaded])),
            norm_delay=float(np.sum(realized[loaded] / deadlines[loaded])),
            flight_j=flight_j,
            compute_j=plan2.compute_energy_j,
            comm_j=plan2.comm_energy_j,
            energy_weighted=breakdown.weighted_total(cfg.energy),
            success_rate=success,
            r_t=r_t,
            n_failed=len(failed),
            n_surplus=len(surplus),
            n_actions_applied=n_applied,
        )
        self.slot_index += 1
        return SlotRecord(
            metrics=metrics,
            reward=reward,
            plan1=plan1,
            plan2=plan2,
            inputs1=inputs1,
            inputs2=inputs2,
            flight_j=flight_j,
            allocation=alloc,
            replayed_delay_s=realized,
            deadlines_s=deadlines,
            task_bits=bits.copy(),
            bs_admitted_bits=bs_adm,
            uav_admitted_bits=uav_adm,
            stages=stages,
            queue_events=events,
            uav_snapshot=uav_snapshot,
        )

    def finish_episode(self) -> None:
        """Flush the trailing transition with a terminal bootstrap of zero."""
        if self.pending is not None:
            s_prev, a_prev, r_prev = self.pending
            self.agent.buffer.add(Transition(
                s_prev, a_prev, r_prev, np.zeros_like(s_prev), True))
            self.pending = None
        if self.train:
            self.agent.decay_exploration()


@dataclass
class EpisodeResult:
    metrics: list[SlotMetrics]
    records: list[SlotRecord] = field(default_factory=list)

    @property
    def mean_success(self) -> float:
        return float(np.mean([m.success_rate for m in self.metrics])) if self.metrics else 1.0

    @property
    def mean_rt(self) -> float:
        return float(np.mean([m.r_t for m in self.metrics])) if self.metrics else 0.0


def validate_stage_trace(stages: list[str]) -> None:
    """The executed stage sequence must match the pipeline schema exactly."""
    if tuple(stages) != STAGES:
        raise AssertionError(f"stage trace {stages} != expected {list(STAGES)}")


def run_episode(
    cfg: ExperimentConfig,
    scheduler_mode: str = "rule",
    train: bool = True,
    endpoint=None,
    out_dir: str | Path | None = None,
    keep_records: bool = True,
    sim: Simulation | None = None,
) -> EpisodeResult:
    """Run cfg.run.num_slots slots; optionally write the output files."""
    if sim is None:
        sim = Simulation(cfg, scheduler_mode, train, endpoint)
    metrics, records = [], []
    for _ in range(cfg.run.num_slots):
        rec = sim.run_slot()
        validate_stage_trace(rec.stages)
        metrics.append(rec.metrics)
        if keep_records:
            records.append(rec)
    sim.finish_episode()
    result = EpisodeResult(metrics, records)
    if out_dir is not None:
        write_outputs(Path(out_dir), cfg, result, sim)
    return result


def write_outputs(out_dir: Path, cfg: ExperimentConfig, result: EpisodeResult,
                  sim: Simulation) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.scenario.seed
    with open(out_dir / "metrics.csv", "w", newline="") as f:
        writer = csv.writer(f)
        header = ["schema", "seed"] + [k for k in SlotMetrics.__dataclass_fields__]
        writer.writerow(header)
        for m in result.metrics:
            writer.writerow([METRICS_SCHEMA_VERSION, seed]
                            + [getattr(m, k) for k in SlotMetrics.__dataclass_fields__])
    with open(out_dir / "trajectories.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["schema", "seed", "slot", "uav", "x", "y", "z",
                         "radius", "covered_count"])
        for rec in result.records:
            for uid, x, y, z, radius, count in rec.uav_snapshot:
                writer.writerow([METRICS_SCHEMA_VERSION, seed, rec.metrics.slot,
                                 uid, x, y, z, radius, count])
    with open(out_dir / "queues.jsonl", "w") as f:
        for rec in result.records:
            for ev in rec.queue_events:
                f.write(json.dumps({
                    "seed": seed, "slot": ev.slot, "node": ev.node,
                    "vehicle": ev.vehicle, "arrival": ev.arrival,
                    "delay": ev.delay, "service": ev.service,
                }, sort_keys=True) + "\n")
    with open(out_dir / "prompts.jsonl", "w") as f:
        for entry in sim.scheduler.call_log:
            f.write(json.dumps({"seed": seed, **entry}, sort_keys=True) + "\n")
    from .config import dump_config

    (out_dir / "config.txt").write_text(dump_config(cfg))
