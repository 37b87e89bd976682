"""V2I and ground-to-air link budgets and achievable rates.

All budgets are additive in dB; powers are dBm.  V2I path loss follows the
cellular 128.1 + 37.6 log10(d_km) model with AR(1) shadow fading and
per-resource-block Rayleigh fast fading.  Ground-to-air links use the
elevation-angle logistic LoS probability, the LoS/NLoS-mixed mean free-space
path loss, and Rician fast fading.  Links on disjoint resource blocks are
orthogonal, so there is no inter-link interference term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ChannelConfig

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


@dataclass
class LinkBudget:
    pathloss_db: float
    shadow_db: float
    fast_fading_db: float
    rx_power_dbm: float
    noise_dbm: float
    snr_linear: float


def v2i_pathloss_db(d_m: float) -> float:
    """Cellular V2I path loss at distance d_m (meters)."""
    if d_m <= 0:
        raise ValueError("distance must be positive")
    return 128.1 + 37.6 * math.log10(d_m / 1000.0)


def update_shadow(prev_db: float, delta_d_m: float, cfg: ChannelConfig,
                  rng: np.random.Generator) -> float:
    """AR(1) shadow-fading update over a movement of delta_d_m meters."""
    if delta_d_m < 0:
        raise ValueError("movement distance must be nonnegative")
    rho = math.exp(-delta_d_m / cfg.decorrelation_m)
    # The innovation is drawn unconditionally to keep the RNG stream aligned
    # across vehicles regardless of their per-slot movement.
    noise = rng.normal(0.0, cfg.shadow_std_db)
    return rho * prev_db + math.sqrt(max(0.0, 1.0 - rho * rho)) * noise


def rayleigh_gains(rng: np.random.Generator, shape=()) -> np.ndarray:
    """Power gains |h|^2 of unit-mean Rayleigh fading (complex CN(0,1))."""
    re = rng.normal(0.0, math.sqrt(0.5), shape)
    im = rng.normal(0.0, math.sqrt(0.5), shape)
    return re * re + im * im


def rayleigh_fast_fading_db(rng: np.random.Generator) -> float:
    """One draw of 20*log10|h| with h complex circular Gaussian, E|h|^2 = 1."""
    return float(10.0 * np.log10(rayleigh_gains(rng)))


def rician_gains(k_linear: float, rng: np.random.Generator, shape=()) -> np.ndarray:
    """Power gains |h|^2 of unit-mean Rician fading with factor K (linear)."""
    if k_linear < 0:
        raise ValueError("K factor must be nonnegative")
    theta = rng.uniform(0.0, 2.0 * math.pi, shape)
    re = rng.normal(0.0, math.sqrt(0.5), shape)
    im = rng.normal(0.0, math.sqrt(0.5), shape)
    los = math.sqrt(k_linear / (k_linear + 1.0))
    nlos = math.sqrt(1.0 / (k_linear + 1.0))
    h_re = los * np.cos(theta) + nlos * re
    h_im = los * np.sin(theta) + nlos * im
    return h_re * h_re + h_im * h_im


def rician_fading_db(k_linear: float, rng: np.random.Generator) -> float:
    return float(10.0 * np.log10(rician_gains(k_linear, rng)))


def los_probability(z_u: float, d_mu: float, cfg: ChannelConfig) -> float:
    """Logistic LoS probability as a function of elevation angle (degrees)."""
    if z_u <= 0:
        raise ValueError("altitude must be positive")
    if z_u > d_mu * (1.0 + 1e-12):
        raise ValueError("slant distance cannot be below altitude")
    theta_deg = math.degrees(math.asin(min(1.0, z_u / d_mu)))
    return 1.0 / (1.0 + cfg.omega_a * math.exp(-cfg.omega_b * (theta_deg - cfg.omega_a)))


def free_space_pathloss_db(d_m: float, carrier_hz: float) -> float:
    if d_m <= 0:
        raise ValueError("distance must be positive")
    return 20.0 * math.log10(4.0 * math.pi * d_m * carrier_hz / SPEED_OF_LIGHT)


def g2a_mean_pathloss_db(d_mu: float, z_u: float, cfg: ChannelConfig) -> float:
    """LoS-probability-weighted mean ground-to-air path loss."""
    p_los = los_probability(z_u, d_mu, cfg)
    c_fs = free_space_pathloss_db(d_mu, cfg.carrier_hz)
    return c_fs + p_los * (cfg.eta_los_db - cfg.eta_nlos_db) + cfg.eta_nlos_db


def noise_dbm(bandwidth_hz: float, cfg: ChannelConfig) -> float:
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return cfg.noise_dbm_per_hz + 10.0 * math.log10(bandwidth_hz)


def shannon_rate_bps(bandwidth_hz: float, snr_linear: float) -> float:
    if bandwidth_hz == 0:
        return 0.0
    return bandwidth_hz * math.log2(1.0 + snr_linear)


def v2i_budget(
    tx_power_dbm: float,
    pathloss_db: float,
    shadow_db: float,
    fading_db: float,
    bandwidth_hz: float,
    cfg: ChannelConfig,
) -> LinkBudget:
    rx = (tx_power_dbm - pathloss_db + shadow_db + fading_db
          + cfg.tx_gain_db + cfg.rx_gain_bs_db)
    n = noise_dbm(bandwidth_hz, cfg)
    return LinkBudget(pathloss_db, shadow_db, fading_db, rx, n,
                      db_to_linear(rx - n))


def g2a_budget(
    tx_power_dbm: float,
    mean_pathloss_db: float,
    fading_db: float,
    bandwidth_hz: float,
    cfg: ChannelConfig,
) -> LinkBudget:
    # No shadow term on the air link; fading enters additively like V2I.
    rx = (tx_power_dbm - mean_pathloss_db + fading_db
          + cfg.tx_gain_db + cfg.rx_gain_uav_db)
    n = noise_dbm(bandwidth_hz, cfg)
    return LinkBudget(mean_pathloss_db, 0.0, fading_db, rx, n,
                      db_to_linear(rx - n))


def v2i_rate_bps(
    rb_count: int,
    tx_power_dbm: float,
    pathloss_db: float,
    shadow_db: float,
    fading_db: float,
    cfg: ChannelConfig,
) -> float:
    """Shannon rate of a V2I link over rb_count resource blocks."""
    if rb_count < 0:
        raise ValueError("rb_count must be nonnegative")
    if rb_count == 0:
        return 0.0
    bw = rb_count * cfg.rb_bandwidth_hz
    budget = v2i_budget(tx_power_dbm, pathloss_db, shadow_db, fading_db, bw, cfg)
    return shannon_rate_bps(bw, budget.snr_linear)


def g2a_rate_bps(
    rb_count: int,
    tx_power_dbm: float,
    mean_pathloss_db: float,
    fading_db: float,
    cfg: ChannelConfig,
) -> float:
    """Shannon rate of a ground-to-air link over rb_count resource blocks."""
    if rb_count < 0:
        raise ValueError("rb_count must be nonnegative")
    if rb_count == 0:
        return 0.0
    bw = rb_count * cfg.rb_bandwidth_hz
    budget = g2a_budget(tx_power_dbm, mean_pathloss_db, fading_db, bw, cfg)
    return shannon_rate_bps(bw, budget.snr_linear)


def mean_gain_db(gains: np.ndarray) -> float:
    """Effective fading (dB) of a link as the mean linear gain of its RBs."""
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        return 0.0
    return float(10.0 * np.log10(np.mean(gains)))
