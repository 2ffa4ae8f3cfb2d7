"""Air-to-ground link model: path loss, Shannon rate, range gating, OFDMA
bandwidth sharing and the command downlink delay."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ChannelParams:
    carrier_freq: float = 2e9
    excess_los: float = 1.0
    excess_nlos: float = 20.0
    s_curve_a: float = 9.61
    s_curve_b: float = 0.16
    noise_power: float = 1e-9
    comm_range: float = 105.0

    def __post_init__(self):
        if self.carrier_freq <= 0 or self.noise_power <= 0 or self.comm_range <= 0:
            raise ValueError("carrier_freq, noise_power and comm_range must be positive")


@dataclass(frozen=True)
class LinkBudget:
    node_id: object
    bandwidth: float
    tx_power: float

    def __post_init__(self):
        if self.bandwidth <= 0 or self.tx_power <= 0:
            raise ValueError("bandwidth and tx_power must be positive")


@dataclass(frozen=True)
class DelayModel:
    mode: str = "payload"
    slots: int = 0
    payload_bits: float = 1024.0

    def __post_init__(self):
        if self.mode not in ("zero", "fixed", "payload"):
            raise ValueError(f"unknown delay mode {self.mode!r}")
        if self.mode == "fixed" and self.slots < 0:
            raise ValueError("fixed delay must be >= 0 slots")
        if self.mode == "payload" and self.payload_bits <= 0:
            raise ValueError("payload_bits must be positive")


def fspl_db(d: float, carrier_freq: float) -> float:
    return (
        20.0 * math.log10(d)
        + 20.0 * math.log10(carrier_freq)
        + 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
    )


def los_probability(elevation_deg: float, a: float, b: float) -> float:
    return 1.0 / (1.0 + a * math.exp(-b * (elevation_deg - a)))


def path_loss_db(horizontal_dist: float, height_diff: float, params: ChannelParams) -> float:
    """Mean air-to-ground path loss: free space plus LoS/NLoS-weighted excess."""
    d = math.hypot(horizontal_dist, height_diff)
    if d == 0.0:
        raise ValueError("path loss undefined at zero distance")
    theta = math.degrees(math.atan2(abs(height_diff), abs(horizontal_dist)))
    p_los = los_probability(theta, params.s_curve_a, params.s_curve_b)
    return (
        fspl_db(d, params.carrier_freq)
        + p_los * params.excess_los
        + (1.0 - p_los) * params.excess_nlos
    )


def rate_bps(budget: LinkBudget, pl_db: float, noise_power: float) -> float:
    snr = budget.tx_power / (noise_power * 10.0 ** (pl_db / 10.0))
    return budget.bandwidth * math.log2(1.0 + snr)


def shannon_rate(bandwidth: float, tx_power: float, pl_db: float, noise_power: float) -> float:
    # hot-path variant of rate_bps without the LinkBudget wrapper
    return bandwidth * math.log2(1.0 + tx_power / (noise_power * 10.0 ** (pl_db / 10.0)))


def in_range(q_uav, q_dev, comm_range: float) -> bool:
    d2 = (q_uav[0] - q_dev[0]) ** 2 + (q_uav[1] - q_dev[1]) ** 2 + (q_uav[2] - q_dev[2]) ** 2
    return math.sqrt(d2) <= comm_range


def footprint_radius(comm_range: float, altitude: float) -> float:
    """Horizontal radius of the ground disc covered by a closed 3D range ball."""
    return math.sqrt(max(comm_range**2 - altitude**2, 0.0))


def ofdma_split(total_bandwidth: float, active) -> dict:
    if total_bandwidth <= 0:
        raise ValueError("total bandwidth must be positive")
    active = list(active)
    if not active:
        return {}
    share = total_bandwidth / len(active)
    return {n: share for n in active}


def command_delay_slots(model: DelayModel, bs_uav_rate: float, tau: float) -> int:
    if model.mode == "zero":
        return 0
    if model.mode == "fixed":
        return int(model.slots)
    if not bs_uav_rate > 0:
        raise ValueError("command link outage: BS->UAV rate is zero")
    return int(math.ceil((model.payload_bits / bs_uav_rate) / tau))
