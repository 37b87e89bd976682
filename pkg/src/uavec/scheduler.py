"""Macro-adjustment of the agent's allocation for failed and surplus tasks.

After the first offloading solve, tasks are classified by slack against their
deadlines.  Failed tasks trigger macro-actions, either from a remote LLM
endpoint (structured prompt, JSON action list) or from a deterministic rule
engine with the same action vocabulary.  A constraint checker applies actions
sequentially and rejects any that would break allocation invariants, so the
engine choice cannot corrupt state.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .drl.allocation import V2I, V2U, ResourceAllocation
from .llm import EndpointError, LlmEndpoint

log = logging.getLogger(__name__)

FAILED, SURPLUS, NOMINAL = "failed", "surplus", "nominal"


@dataclass
class TaskOutcome:
    vehicle: int
    completion_s: float
    deadline_s: float
    rb_v2i: int
    rb_v2u: int
    power_v2i_dbm: float
    power_v2u_dbm: float
    pathloss_v2i_db: float
    pathloss_v2u_db: float

    @property
    def slack_s(self) -> float:
        return self.deadline_s - self.completion_s

    def classification(self, surplus_threshold_s: float) -> str:
        if self.slack_s < 0:
            return FAILED
        if self.slack_s >= surplus_threshold_s:
            return SURPLUS
        return NOMINAL


@dataclass
class MacroAction:
    kind: str  # transfer_rb | update_power
    vehicle: int = 0
    link: str = V2I
    power_dbm: float = 0.0
    from_vehicle: int = 0
    from_link: str = V2I
    to_vehicle: int = 0
    to_link: str = V2I
    count: int = 0

    def to_json_obj(self) -> dict:
        if self.kind == "transfer_rb":
            return {"action": self.kind, "from_vehicle": self.from_vehicle,
                    "from_link": self.from_link, "to_vehicle": self.to_vehicle,
                    "to_link": self.to_link, "count": self.count}
        return {"action": self.kind, "vehicle": self.vehicle,
                "link": self.link, "power_dbm": self.power_dbm}


class ActionParseError(ValueError):
    """No JSON action array could be extracted from the model output."""


def classify_tasks(outcomes: list[TaskOutcome], surplus_threshold_s: float):
    """Split outcomes into (failed worst-first, surplus richest-first, nominal)."""
    failed = sorted(
        (o for o in outcomes if o.classification(surplus_threshold_s) == FAILED),
        key=lambda o: o.slack_s,
    )
    surplus = sorted(
        (o for o in outcomes if o.classification(surplus_threshold_s) == SURPLUS),
        key=lambda o: -o.slack_s,
    )
    nominal = [o for o in outcomes if o.classification(surplus_threshold_s) == NOMINAL]
    return failed, surplus, nominal


@dataclass
class PromptBundle:
    system: str
    examples: str
    data: str

    @property
    def full(self) -> str:
        return self.system + "\n\n" + self.examples + "\n\n" + self.data

    @property
    def user(self) -> str:
        return self.examples + "\n\n" + self.data


_SYSTEM_TEMPLATE = """You are a resource scheduler for a vehicular network. Vehicles upload task
fragments to a base station (link "v2i") and to a serving drone (link "v2u")
over shared spectrum blocks. You receive a JSON object listing tasks that
will miss their deadline ("failed") and tasks finishing early with spare
resources ("surplus"), with per-link block counts, transmit powers (dBm) and
path losses (dB).

Rescue failed tasks by emitting a JSON array of actions, most urgent first:
  {{"action": "transfer_rb", "from_vehicle": <id>, "from_link": "v2i"|"v2u",
    "to_vehicle": <id>, "to_link": "v2i"|"v2u", "count": <n>=1>}}
  {{"action": "update_power", "vehicle": <id>, "link": "v2i"|"v2u",
    "power_dbm": <value>}}

Hard constraints, violations are discarded:
- a transfer must leave the source link with at least 1 block;
- transfer count must be a positive integer;
- power must stay within [{p_min:.1f}, {p_max:.1f}] dBm;
- only listed vehicles may be touched, and a "v2u" target requires the
  vehicle to have a serving drone (rb_v2u or pathloss_v2u_db nonzero).

Give one short paragraph of reasoning, then the JSON array and nothing after
it. Emit [] if nothing helps."""


def system_prompt(p_min_dbm: float, p_max_dbm: float) -> str:
    return _SYSTEM_TEMPLATE.format(p_min=p_min_dbm, p_max=p_max_dbm)


def fewshot_examples() -> str:
    return resources.files("uavec.data").joinpath("scheduler_examples.txt").read_text()


def _outcome_entry(o: TaskOutcome) -> dict:
    return {
        "vehicle": o.vehicle,
        "completion_s": round(o.completion_s, 4),
        "deadline_s": o.deadline_s,
        "slack_s": round(o.slack_s, 4),
        "rb_v2i": o.rb_v2i,
        "rb_v2u": o.rb_v2u,
        "power_v2i_dbm": round(o.power_v2i_dbm, 2),
        "power_v2u_dbm": round(o.power_v2u_dbm, 2),
        "pathloss_v2i_db": round(o.pathloss_v2i_db, 2),
        "pathloss_v2u_db": round(o.pathloss_v2u_db, 2),
    }


def build_prompt(failed: list[TaskOutcome], surplus: list[TaskOutcome],
                 p_min_dbm: float, p_max_dbm: float) -> PromptBundle:
    """Static system/examples sections plus the per-slot serialized data.

    The static prefix is byte-identical across calls so a serving stack can
    cache it; only the JSON data section changes slot to slot.
    """
    data = json.dumps(
        {"failed": [_outcome_entry(o) for o in failed],
         "surplus": [_outcome_entry(o) for o in surplus]},
        sort_keys=True,
    )
    return PromptBundle(system_prompt(p_min_dbm, p_max_dbm), fewshot_examples(), data)


def parse_actions(raw_text: str) -> list[MacroAction]:
    """Extract the first well-formed JSON array and map it to actions.

    Models wrap the array in prose, so scan for candidate '[' positions.
    Elements with unknown kinds or missing fields are dropped individually.
    """
    decoder = json.JSONDecoder()
    array = None
    for i, ch in enumerate(raw_text):
        if ch != "[":
            continue
        try:
            candidate, _ = decoder.raw_decode(raw_text[i:])
        except json.JSONDecodeError:
            continue
        if isinstance(candidate, list):
            array = candidate
            break
    if array is None:
        raise ActionParseError("no JSON action array found in response")
    actions = []
    for item in array:
        if not isinstance(item, dict):
            continue
        kind = item.get("action")
        try:
            if kind == "transfer_rb":
                actions.append(MacroAction(
                    kind=kind,
                    from_vehicle=int(item["from_vehicle"]),
                    from_link=str(item["from_link"]),
                    to_vehicle=int(item["to_vehicle"]),
                    to_link=str(item["to_link"]),
                    count=int(item["count"]),
                ))
            elif kind == "update_power":
                actions.append(MacroAction(
                    kind=kind,
                    vehicle=int(item["vehicle"]),
                    link=str(item["link"]),
                    power_dbm=float(item["power_dbm"]),
                ))
            else:
                log.debug("dropping action with unknown kind: %r", kind)
        except (KeyError, TypeError, ValueError):
            log.debug("dropping malformed action: %r", item)
    return actions


def validate_and_apply(
    actions: list[MacroAction],
    alloc: ResourceAllocation,
    gains: dict[str, np.ndarray],
    p_min_dbm: float,
    p_max_dbm: float,
    covered: np.ndarray,
) -> tuple[ResourceAllocation, list[MacroAction], list[MacroAction]]:
    """Apply actions in order, each checked against the running post-state.

    Transfers move the donor's lowest-gain block indices so the donor keeps
    its best spectrum.  Rejected actions are returned as data, not errors.
    """
    out = alloc.copy()
    applied, rejected = [], []

    def link_ok(vehicle: int, link: str) -> bool:
        if not 0 <= vehicle < out.num_vehicles:
            return False
        return bool(covered[vehicle]) if link == V2U else True

    for act in actions:
        ok = False
        if act.kind == "update_power":
            ok = (
                link_ok(act.vehicle, act.link)
                and act.link in (V2I, V2U)
                and p_min_dbm - 1e-9 <= act.power_dbm <= p_max_dbm + 1e-9
            )
            if ok:
                out.set_power(act.vehicle, act.link, float(act.power_dbm))
        elif act.kind == "transfer_rb":
            src = out.indices(act.from_vehicle, act.from_link) \
                if 0 <= act.from_vehicle < out.num_vehicles else []
            ok = (
                act.count >= 1
                and act.from_link in (V2I, V2U)
                and act.to_link in (V2I, V2U)
                and link_ok(act.from_vehicle, act.from_link)
                and link_ok(act.to_vehicle, act.to_link)
                and (act.from_vehicle, act.from_link) != (act.to_vehicle, act.to_link)
                and len(src) - act.count >= 1
            )
            if ok:
                donor_gains = gains[act.from_link][act.from_vehicle]
                moved = sorted(src, key=lambda i: (donor_gains[i], i))[: act.count]
                for i in moved:
                    src.remove(i)
                dst = out.indices(act.to_vehicle, act.to_link)
                dst.extend(moved)
                dst.sort()
        (applied if ok else rejected).append(act)
    return out, applied, rejected


@dataclass
class ProjectionContext:
    """Cheap completion-time model for the rule engine.

    Transmission delays are recomputed from candidate allocations; queue and
    compute components are frozen at the values of the first offload solve.
    rate_fn(vehicle, link, indices, power_dbm) supplies the channel model.
    """

    task_bits: np.ndarray
    deadlines_s: np.ndarray
    gamma_local: np.ndarray
    gamma_bs: np.ndarray
    gamma_uav: np.ndarray
    local_delay_s: np.ndarray
    fixed_bs_s: np.ndarray   # queue estimate + compute time of the BS fragment
    fixed_uav_s: np.ndarray
    rate_fn: object = field(repr=False, default=None)

    def completion(self, vehicle: int, alloc: ResourceAllocation) -> float:
        m = vehicle
        total = self.local_delay_s[m]
        if self.gamma_bs[m] > 0:
            rate = self.rate_fn(m, V2I, alloc.rb_v2i[m], alloc.power_v2i_dbm[m])
            tx = self.gamma_bs[m] * self.task_bits[m] / rate if rate > 0 else np.inf
            total = max(total, tx + self.fixed_bs_s[m])
        if self.gamma_uav[m] > 0:
            rate = self.rate_fn(m, V2U, alloc.rb_v2u[m], alloc.power_v2u_dbm[m])
            tx = self.gamma_uav[m] * self.task_bits[m] / rate if rate > 0 else np.inf
            total = max(total, tx + self.fixed_uav_s[m])
        return total

    def slack(self, vehicle: int, alloc: ResourceAllocation) -> float:
        return self.deadlines_s[vehicle] - self.completion(vehicle, alloc)

    def bottleneck_link(self, vehicle: int, alloc: ResourceAllocation) -> str | None:
        """The transmission link on the slowest offload branch.

        Make-span-balanced plans tie branches exactly, so the local branch
        only suppresses action when it strictly dominates every transmission
        branch (then no spectrum or power change can move the completion).
        """
        m = vehicle
        best_link, best_time = None, -np.inf
        if self.gamma_bs[m] > 0:
            rate = self.rate_fn(m, V2I, alloc.rb_v2i[m], alloc.power_v2i_dbm[m])
            t = (self.gamma_bs[m] * self.task_bits[m] / rate if rate > 0 else np.inf) \
                + self.fixed_bs_s[m]
            best_link, best_time = V2I, t
        if self.gamma_uav[m] > 0:
            rate = self.rate_fn(m, V2U, alloc.rb_v2u[m], alloc.power_v2u_dbm[m])
            t = (self.gamma_uav[m] * self.task_bits[m] / rate if rate > 0 else np.inf) \
                + self.fixed_uav_s[m]
            if t > best_time:
                best_link, best_time = V2U, t
        if best_link is None or self.local_delay_s[m] > best_time + 1e-9:
            return None
        return best_link


def rule_based_fallback(
    failed: list[TaskOutcome],
    surplus: list[TaskOutcome],
    alloc: ResourceAllocation,
    ctx: ProjectionContext,
    gains: dict[str, np.ndarray],
    p_min_dbm: float,
    p_max_dbm: float,
    covered: np.ndarray,
    max_actions: int = 16,
) -> list[MacroAction]:
    """Deterministic greedy stand-in for the LLM.

    Worst failed task first: boost its bottleneck link to full power, then
    pull blocks one at a time from the richest link of the most-surplus donor
    (donor keeps at least one block and must itself stay within deadline).
    """
    work = alloc.copy()
    actions: list[MacroAction] = []
    donors = list(surplus)

    def emit(action: MacroAction) -> bool:
        nonlocal work
        if len(actions) >= max_actions:
            return False
        new_alloc, applied, _ = validate_and_apply(
            [action], work, gains, p_min_dbm, p_max_dbm, covered)
        if not applied:
            return False
        work = new_alloc
        actions.append(action)
        return True

    for task in failed:
        m = task.vehicle
        link = ctx.bottleneck_link(m, work)
        if link is None:
            continue  # local branch dominates; spectrum cannot help
        if work.power_dbm(m, link) < p_max_dbm - 1e-9:
            emit(MacroAction(kind="update_power", vehicle=m, link=link,
                             power_dbm=p_max_dbm))
        while ctx.slack(m, work) < 0 and len(actions) < max_actions:
            link = ctx.bottleneck_link(m, work)
            if link is None:
                break
            moved = False
            for donor in donors:
                if donor.vehicle == m:
                    continue
                rich = max((V2I, V2U), key=lambda l: len(work.indices(donor.vehicle, l)))
                if len(work.indices(donor.vehicle, rich)) <= 1:
                    continue
                action = MacroAction(kind="transfer_rb",
                                     from_vehicle=donor.vehicle, from_link=rich,
                                     to_vehicle=m, to_link=link, count=1)
                candidate, applied, _ = validate_and_apply(
                    [action], work, gains, p_min_dbm, p_max_dbm, covered)
                if not applied:
                    continue
                # Donor protection: the transfer must not push the donor
                # itself past its deadline in the projection model.
                if ctx.slack(donor.vehicle, candidate) < 0:
                    continue
                if emit(action):
                    moved = True
                    break
            if not moved:
                break
    return actions


def llm_actions(
    bundle: PromptBundle,
    endpoint: LlmEndpoint,
) -> tuple[list[MacroAction], str]:
    """Query the endpoint and parse its action list; raises on failure."""
    raw = endpoint.chat(bundle.system, bundle.user)
    return parse_actions(raw), raw


class MacroScheduler:
    """Engine selector: 'rule', 'llm' (with rule fallback), or 'off'."""

    def __init__(self, mode: str, endpoint: LlmEndpoint | None = None,
                 max_actions: int = 16):
        if mode not in ("rule", "llm", "off"):
            raise ValueError(f"unknown scheduler mode {mode!r}")
        self.mode = mode
        self.endpoint = endpoint
        self.max_actions = max_actions
        self.call_log: list[dict] = []

    def propose(self, failed, surplus, alloc, ctx, gains,
                p_min_dbm, p_max_dbm, covered) -> list[MacroAction]:
        if self.mode == "off" or not failed:
            return []
        if self.mode == "llm":
            bundle = build_prompt(failed, surplus, p_min_dbm, p_max_dbm)
            try:
                actions, raw = llm_actions(bundle, self.endpoint)
                self.call_log.append({"prompt": bundle.data, "response": raw,
                                      "engine": "llm"})
                return actions[: self.max_actions]
            except (EndpointError, ActionParseError) as exc:
                log.warning("llm scheduler failed (%s); using rule engine", exc)
        actions = rule_based_fallback(failed, surplus, alloc, ctx, gains,
                                      p_min_dbm, p_max_dbm, covered,
                                      self.max_actions)
        self.call_log.append({
            "prompt": build_prompt(failed, surplus, p_min_dbm, p_max_dbm).data,
            "response": json.dumps([a.to_json_obj() for a in actions]),
            "engine": "rule",
        })
        return actions
