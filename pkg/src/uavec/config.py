"""Experiment configuration: typed sections, flat key-value files, presets.

Every tunable lives in one of the dataclass sections below.  A config file is
a flat ``key = value`` text file whose keys are the dataclass field names;
field names are globally unique across sections so the file needs no section
headers.  Unknown keys are rejected with the offending key path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed config files or invariant violations."""


@dataclass
class ScenarioConfig:
    area_size_m: float = 300.0
    num_vehicles: int = 50
    num_uavs: int = 5
    slot_duration_s: float = 1.0
    # Truncated-Gaussian vehicle speeds (m/s).
    speed_mean_mps: float = 12.5
    speed_std_mps: float = 1.5
    speed_min_mps: float = 10.0
    speed_max_mps: float = 15.0
    # UAV flight box.
    uav_x_min: float = 0.0
    uav_x_max: float = 300.0
    uav_y_min: float = 0.0
    uav_y_max: float = 300.0
    uav_z_min: float = 50.0
    uav_z_max: float = 100.0
    # Per-slot displacement caps and speed cap.
    l_max_h_m: float = 15.0
    l_max_v_m: float = 10.0
    uav_v_max_mps: float = 20.0
    d_min_m: float = 20.0
    theta_max_rad: float = math.radians(42.44)
    sensing_range_m: float = 70.0
    bs_x: float = 150.0
    bs_y: float = 150.0
    bs_z: float = 25.0
    antenna_height_m: float = 1.5
    # Serving-UAV selection: cost = lambda1 * load_norm + lambda2 * pathloss_norm.
    serve_lambda1: float = 0.5
    serve_lambda2: float = 0.5
    serve_pathloss_norm_db: float = 120.0
    seed: int = 0

    def validate(self) -> None:
        if not all(
            math.isfinite(v)
            for v in (self.uav_x_min, self.uav_x_max, self.uav_y_min,
                      self.uav_y_max, self.uav_z_min, self.uav_z_max)
        ):
            raise ConfigError("UAV flight bounds must be finite")
        for lo, hi, name in (
            (self.uav_x_min, self.uav_x_max, "uav_x"),
            (self.uav_y_min, self.uav_y_max, "uav_y"),
            (self.uav_z_min, self.uav_z_max, "uav_z"),
        ):
            if lo > hi:
                raise ConfigError(f"{name}_min > {name}_max")
        if self.d_min_m <= 0:
            raise ConfigError("d_min_m must be positive")
        if not 0 < self.theta_max_rad < math.pi / 2:
            raise ConfigError("theta_max_rad must lie in (0, pi/2)")
        if not self.speed_min_mps <= self.speed_mean_mps <= self.speed_max_mps:
            raise ConfigError("speed bounds must satisfy min <= mean <= max")


@dataclass
class ChannelConfig:
    carrier_hz: float = 2.4e9
    rb_bandwidth_hz: float = 180e3
    total_bandwidth_hz: float = 10e6
    omega_a: float = 9.61
    omega_b: float = 0.16
    eta_los_db: float = 1.0
    eta_nlos_db: float = 20.0
    decorrelation_m: float = 25.0
    shadow_std_db: float = 4.0
    rician_k_db: float = 6.0
    # Thermal density -174 dBm/Hz plus a 9 dB receiver noise figure.
    noise_dbm_per_hz: float = -165.0
    tx_gain_db: float = 3.0
    rx_gain_bs_db: float = 8.0
    rx_gain_uav_db: float = 5.0
    p_min_dbm: float = 0.0
    p_max_dbm: float = 23.0

    def validate(self) -> None:
        if self.total_bandwidth_hz < self.rb_bandwidth_hz:
            raise ConfigError("total bandwidth smaller than one resource block")
        if self.omega_a <= 0 or self.omega_b <= 0:
            raise ConfigError("omega_a and omega_b must be positive")
        if self.eta_nlos_db < self.eta_los_db:
            raise ConfigError("eta_nlos_db must be >= eta_los_db")
        if self.p_min_dbm > self.p_max_dbm:
            raise ConfigError("p_min_dbm > p_max_dbm")

    @property
    def total_rbs(self) -> int:
        return int(self.total_bandwidth_hz // self.rb_bandwidth_hz)


@dataclass
class TaskConfig:
    cycles_per_bit: float = 1000.0
    deadline_s: float = 1.0
    total_load_mb: float = 40.0
    local_hz: float = 0.5e9
    uav_hz: float = 5e9
    bs_hz: float = 9e9

    def validate(self) -> None:
        if min(self.local_hz, self.uav_hz, self.bs_hz) <= 0:
            raise ConfigError("compute frequencies must be positive")
        if self.deadline_s <= 0:
            raise ConfigError("deadline_s must be positive")


@dataclass
class EnergyConfig:
    p_hover_w: float = 120.0
    v_ref_mps: float = 8.0
    c_d: float = 0.01
    mass_kg: float = 2.0
    gravity: float = 9.81
    c_v: float = 0.5
    alpha_descent: float = 0.3
    p_anc_w: float = 5.0
    kappa: float = 1e-27
    # Reporting weights for the flight/compute/comm energy breakdown.
    energy_weight_flight: float = 0.3
    energy_weight_compute: float = 1.0
    energy_weight_comm: float = 100.0
    # Objective weights (delay, energy, deadline penalty).
    omega1: float = 1.0
    omega2: float = 0.001
    omega3: float = 5.0

    def validate(self) -> None:
        if not 0 < self.alpha_descent < 1:
            raise ConfigError("alpha_descent must lie in (0, 1)")
        if self.kappa < 0:
            raise ConfigError("kappa must be nonnegative")
        if min(self.p_hover_w, self.p_anc_w) < 0:
            raise ConfigError("powers must be nonnegative")


@dataclass
class TrajectoryConfig:
    beta1: float = 1.0
    beta2: float = 0.05
    beta3: float = 0.02
    w_eng: float = 1.0
    c_xy: float = 1e-3
    c_up: float = 0.05
    c_down: float = 0.01
    r_min: float = -1.0
    n_max_m: float = 30.0
    # Coverage-metric weights (altitude and flight-energy penalties).
    coverage_omega_h: float = 0.01
    coverage_omega_e: float = 0.001
    rotate_order: bool = False

    def validate(self) -> None:
        if self.r_min > 0:
            raise ConfigError("r_min must be <= 0")
        if self.n_max_m <= 0:
            raise ConfigError("n_max_m must be positive")
        if self.c_up <= self.c_down:
            raise ConfigError("climb weight c_up must exceed descent weight c_down")


@dataclass
class AgentConfig:
    hidden1: int = 256
    hidden2: int = 256
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    discount: float = 0.95
    tau: float = 0.005
    explore_sigma: float = 0.1
    explore_decay: float = 0.999
    batch_size: int = 128
    buffer_capacity: int = 100_000

    def validate(self) -> None:
        if not 0 <= self.discount < 1:
            raise ConfigError("discount must lie in [0, 1)")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must lie in (0, 1]")


@dataclass
class SchedulerConfig:
    surplus_threshold_frac: float = 0.3
    max_actions: int = 16
    llm_base_url: str = ""
    llm_model: str = ""
    llm_timeout_s: float = 10.0
    llm_max_attempts: int = 2

    def validate(self) -> None:
        if not 0 < self.surplus_threshold_frac < 1:
            raise ConfigError("surplus_threshold_frac must lie in (0, 1)")
        if self.max_actions < 1:
            raise ConfigError("max_actions must be >= 1")


@dataclass
class RunConfig:
    num_slots: int = 100
    updates_per_slot: int = 1

    def validate(self) -> None:
        if self.num_slots < 0:
            raise ConfigError("num_slots must be >= 0")


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> "ExperimentConfig":
        for section in _SECTIONS:
            getattr(self, section).validate()
        return self


_SECTIONS = tuple(f.name for f in fields(ExperimentConfig))


def _flat_field_map() -> dict[str, tuple[str, dataclasses.Field]]:
    mapping: dict[str, tuple[str, dataclasses.Field]] = {}
    for section in _SECTIONS:
        cls = ExperimentConfig.__dataclass_fields__[section].default_factory  # type: ignore[union-attr]
        for f in fields(cls):
            if f.name in mapping:
                raise AssertionError(f"duplicate config key {f.name!r}")
            mapping[f.name] = (section, f)
    return mapping


FLAT_FIELDS = _flat_field_map()


def _parse_value(raw: str, typ: type):
    raw = raw.strip()
    if typ is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot parse boolean from {raw!r}")
    if typ is int:
        return int(raw)
    if typ is float:
        return float(raw)
    return raw


def apply_flat(cfg: ExperimentConfig, items: dict[str, object]) -> ExperimentConfig:
    """Apply flat key overrides in place, coercing strings to field types."""
    for key, value in items.items():
        if key not in FLAT_FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        section, f = FLAT_FIELDS[key]
        typ = {"int": int, "float": float, "bool": bool, "str": str}[f.type] \
            if isinstance(f.type, str) else f.type
        if isinstance(value, str):
            value = _parse_value(value, typ)
        elif typ is float and isinstance(value, int):
            value = float(value)
        setattr(getattr(cfg, section), key, value)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a flat key-value file into a validated ExperimentConfig."""
    cfg = ExperimentConfig()
    text = Path(path).read_text()
    items: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        items[key.strip()] = raw.strip()
    apply_flat(cfg, items)
    cfg.validate()
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize to the flat format; load_config(dump_config(cfg)) == cfg."""
    lines = []
    for key, (section, f) in FLAT_FIELDS.items():
        value = getattr(getattr(cfg, section), key)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# Named experiment presets: overlays of flat keys applied on top of defaults.
PRESETS: dict[str, dict[str, object]] = {
    "fig4-fixed-alt": {"uav_z_min": 50.0, "uav_z_max": 50.0},
    "fig4-variable-alt": {"uav_z_min": 50.0, "uav_z_max": 100.0},
    "delay-focused": {"omega1": 1.0, "omega2": 0.001, "omega3": 5.0},
    "energy-focused": {"omega1": 1.0, "omega2": 0.02, "omega3": 5.0},
    "load-30": {"total_load_mb": 30.0},
    "load-40": {"total_load_mb": 40.0},
    "load-50": {"total_load_mb": 50.0},
}


def preset(name: str) -> dict[str, object]:
    """Look up a named config overlay."""
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset: {name!r}") from None


def apply_presets(cfg: ExperimentConfig, names: list[str]) -> ExperimentConfig:
    for name in names:
        apply_flat(cfg, preset(name))
    cfg.validate()
    return cfg
