"""Scenario configuration and its YAML file form."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .channel import ChannelParams, DelayModel
from .semantics import LatentProfile


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    lr: float = 5e-5
    batch_size: int = 64
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    target_sync_interval: int = 1000
    warmup: int = 2000
    episodes: int = 400
    max_grad_norm: Optional[float] = 10.0
    buffer_capacity: int = 50_000
    hidden: tuple = (128, 128, 64)
    train_every: int = 1
    reward_scale: float = 0.01
    eval_interval: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise ConfigError("need 0 <= eps_end <= eps_start <= 1")
        if self.lr <= 0 or self.batch_size < 1 or self.buffer_capacity < 1:
            raise ConfigError("lr, batch_size and buffer_capacity must be positive")
        if self.warmup < self.batch_size:
            raise ConfigError("warmup must be at least one batch")
        if self.eval_interval < 0 or self.reward_scale <= 0:
            raise ConfigError("eval_interval must be >= 0 and reward_scale > 0")
        if self.target_sync_interval < 1 or self.train_every < 1 or self.episodes < 0:
            raise ConfigError("intervals must be >= 1 and episodes >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    arena_width: float = 1000.0
    arena_height: float = 600.0
    n_devices: int = 10
    layout_seed: int = 0
    device_positions: Optional[tuple] = None
    start: tuple = (100.0, 300.0)
    goal: tuple = (900.0, 300.0)
    uav_altitude: float = 100.0
    bs_position: tuple = (500.0, 300.0, 25.0)
    bs_bandwidth: float = 100e3
    bs_tx_power: float = 1.0
    horizon: int = 250
    slot_duration: float = 0.5
    device_bandwidth: float = 20e3
    device_tx_power: float = 1e-3
    channel: ChannelParams = field(default_factory=ChannelParams)
    latent: LatentProfile = field(default_factory=LatentProfile)
    delay: DelayModel = field(default_factory=DelayModel)
    a_max_x: float = 3.0
    a_max_y: float = 3.0
    action_levels: int = 3
    v_max: Optional[float] = None
    v_norm: float = 30.0
    reward_epsilon: float = 1e-6
    shaping_beta: float = 1.0
    goal_bonus: float = 500.0
    goal_tolerance: float = 20.0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(c) for c in self.start))
        object.__setattr__(self, "goal", tuple(float(c) for c in self.goal))
        object.__setattr__(self, "bs_position", tuple(float(c) for c in self.bs_position))
        if self.device_positions is not None:
            pos = tuple((float(x), float(y)) for x, y in self.device_positions)
            object.__setattr__(self, "device_positions", pos)
            object.__setattr__(self, "n_devices", len(pos))
        self.validate()

    def validate(self) -> None:
        positive = dict(
            arena_width=self.arena_width, arena_height=self.arena_height,
            uav_altitude=self.uav_altitude, bs_bandwidth=self.bs_bandwidth,
            bs_tx_power=self.bs_tx_power, slot_duration=self.slot_duration,
            device_bandwidth=self.device_bandwidth, device_tx_power=self.device_tx_power,
            a_max_x=self.a_max_x, a_max_y=self.a_max_y, v_norm=self.v_norm,
            reward_epsilon=self.reward_epsilon, goal_tolerance=self.goal_tolerance,
        )
        for name, value in positive.items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if self.horizon < 1 or self.n_devices < 0:
            raise ConfigError("horizon must be >= 1 and n_devices >= 0")
        if self.action_levels < 2:
            raise ConfigError("action_levels must be >= 2")
        if self.v_max is not None and self.v_max <= 0:
            raise ConfigError("v_max must be positive when set")
        if self.goal_bonus < 0 or self.shaping_beta < 0:
            raise ConfigError("goal_bonus and shaping_beta must be non-negative")
        for name in ("start", "goal"):
            x, y = getattr(self, name)
            if not (0 <= x <= self.arena_width and 0 <= y <= self.arena_height):
                raise ConfigError(f"{name} {getattr(self, name)} lies outside the arena")
        if self.device_positions is not None:
            for x, y in self.device_positions:
                if not (0 <= x <= self.arena_width and 0 <= y <= self.arena_height):
                    raise ConfigError(f"device at ({x}, {y}) lies outside the arena")

    @property
    def n_actions(self) -> int:
        return self.action_levels**2

    @property
    def state_dim(self) -> int:
        return 2 * self.n_devices + 6

    @property
    def arena_diagonal(self) -> float:
        return math.hypot(self.arena_width, self.arena_height)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_NESTED = {"channel": ChannelParams, "latent": LatentProfile, "delay": DelayModel, "train": TrainConfig}


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _NESTED:
            value = {g.name: _plain(getattr(value, g.name)) for g in dataclasses.fields(value)}
        out[f.name] = _plain(value)
    return out


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    if isinstance(value, str):
        # YAML 1.1 reads exponent-only literals such as 1e-9 as strings
        try:
            return float(value)
        except ValueError:
            return value
    return value


def config_from_dict(data: dict) -> ScenarioConfig:
    data = dict(data)
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    try:
        for key, value in data.items():
            if key in _NESTED:
                cls = _NESTED[key]
                sub_known = {f.name for f in dataclasses.fields(cls)}
                bad = set(value or {}) - sub_known
                if bad:
                    raise ConfigError(f"unknown keys in {key}: {sorted(bad)}")
                kwargs[key] = cls(**{k: _tupled(v) for k, v in (value or {}).items()})
            else:
                kwargs[key] = _tupled(value)
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} does not hold a mapping")
    layout_file = data.pop("layout_file", None)
    if layout_file is not None:
        lp = Path(layout_file)
        if not lp.is_absolute():
            lp = Path(path).parent / lp
        data["device_positions"] = [list(p) for p in read_layout_csv(lp)]
    return config_from_dict(data)


def write_layout_csv(positions, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for i, (x, y) in enumerate(positions):
            w.writerow([i, repr(float(x)), repr(float(y))])


def read_layout_csv(path) -> tuple:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["id"]))
    return tuple((float(r["x"]), float(r["y"])) for r in rows)
