"""UAV propulsion, computation, and communication energy plus the objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import EnergyConfig


def horizontal_power_w(v_xy: float, cfg: EnergyConfig) -> float:
    """U-shaped horizontal propulsion power: induced decay plus cubic drag."""
    if v_xy < 0:
        raise ValueError("speed must be nonnegative")
    return cfg.p_hover_w / (1.0 + (v_xy / cfg.v_ref_mps) ** 2) + cfg.c_d * v_xy**3


def vertical_power_w(v_z: float, cfg: EnergyConfig) -> float:
    """Climb pays gravity plus drag; descent recovers a fraction of it."""
    if v_z > 0:
        return cfg.mass_kg * cfg.gravity * v_z + cfg.c_v * v_z * v_z
    return cfg.alpha_descent * cfg.mass_kg * cfg.gravity * v_z


def uav_slot_energy_j(
    prev_pos: np.ndarray, next_pos: np.ndarray, dt: float, cfg: EnergyConfig
) -> float:
    """Propulsion + ancillary energy over one slot, floored at zero.

    Descent can make the vertical power negative; the floor keeps a slot from
    reporting net energy gain (no regenerative storage is modeled).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_xy = math.hypot(next_pos[0] - prev_pos[0], next_pos[1] - prev_pos[1]) / dt
    v_z = (float(next_pos[2]) - float(prev_pos[2])) / dt
    power = horizontal_power_w(v_xy, cfg) + vertical_power_w(v_z, cfg) + cfg.p_anc_w
    return max(0.0, power * dt)


def compute_energy_j(f_hz: float, time_s: float, kappa: float) -> float:
    """Switched-capacitance model: kappa * f^3 * T."""
    if f_hz < 0 or time_s < 0 or kappa < 0:
        raise ValueError("arguments must be nonnegative")
    return kappa * f_hz**3 * time_s


def comm_energy_j(power_dbm: float, tx_delay_s: float) -> float:
    """Transmit energy: linear watts times seconds."""
    if tx_delay_s < 0:
        raise ValueError("delay must be nonnegative")
    watts = 10.0 ** ((power_dbm - 30.0) / 10.0)
    return watts * tx_delay_s


@dataclass
class EnergyBreakdown:
    flight_j: float = 0.0
    compute_j: float = 0.0
    comm_j: float = 0.0

    @property
    def total_j(self) -> float:
        return self.flight_j + self.compute_j + self.comm_j

    def weighted_total(self, cfg: EnergyConfig) -> float:
        return (
            cfg.energy_weight_flight * self.flight_j
            + cfg.energy_weight_compute * self.compute_j
            + cfg.energy_weight_comm * self.comm_j
        )


def system_objective(
    delays_s: np.ndarray,
    deadlines_s: np.ndarray,
    penalties_s: np.ndarray,
    total_energy_j: float,
    cfg: EnergyConfig,
) -> float:
    """Slot objective: weighted normalized delay, energy, and deadline penalty."""
    delays = np.asarray(delays_s, dtype=float)
    deadlines = np.asarray(deadlines_s, dtype=float)
    penalties = np.asarray(penalties_s, dtype=float)
    norm_delay = float(np.sum(delays / deadlines)) if delays.size else 0.0
    return cfg.omega1 * norm_delay + cfg.omega2 * total_energy_j + cfg.omega3 * float(np.sum(penalties))
