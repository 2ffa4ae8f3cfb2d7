"""Episodic MDP for base-station command and control of a data-collecting UAV.

Each call to :meth:`UAVDataCollectionEnv.step` is one slot: the base station
issues an acceleration command that reaches the UAV after the downlink delay,
the UAV moves, devices inside the range ball are served over an equal OFDMA
split, and the slot reward is returned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import channel as ch
from .config import ScenarioConfig
from .semantics import (
    SERVING,
    UNTOUCHED,
    VISITED,
    curve_psnr,
    deliver,
    initial_state,
)
from .world import (
    ZERO_ACCEL,
    Accel2,
    CommandQueue,
    MissionClock,
    Position3,
    Velocity2,
    active_acceleration,
    distance_2d,
    enqueue_command,
    step_kinematics,
)

# Order of the per-slot fields in a serialised trace. Plot and audit tooling
# depends on it; append new fields at the end only.
TRACE_FIELDS = (
    "t", "x", "y", "vx", "vy", "ax", "ay", "cmd_ax", "cmd_ay", "delay",
    "serving", "received", "psnr", "r_c", "r_d", "r_g",
)
_STATUS_CODE = {UNTOUCHED: 0.0, SERVING: 0.5, VISITED: 1.0}


class RewardBreakdown(NamedTuple):
    r_c: float
    r_d: float
    r_g: float
    total: float


def compute_reward(
    serving_psnr,
    d_prev: float,
    d_now: float,
    just_reached: bool,
    *,
    epsilon: float = 1e-6,
    beta: float = 1.0,
    d_diag: float = 1.0,
    goal_bonus: float = 500.0,
) -> RewardBreakdown:
    """Slot reward: quality of the served devices, progress shaping, goal bonus."""
    serving_psnr = list(serving_psnr)
    r_c = sum(serving_psnr) / (len(serving_psnr) + epsilon)
    r_d = beta * (d_prev - d_now) / d_diag
    r_g = goal_bonus if just_reached else 0.0
    return RewardBreakdown(r_c, r_d, r_g, r_c + r_d + r_g)


def action_table(a_max_x: float, a_max_y: float, levels: int = 3) -> list:
    """Discrete acceleration grid; index ``i`` maps to ``(ax[i // L], ay[i % L])``."""
    ax = np.linspace(-a_max_x, a_max_x, levels)
    ay = np.linspace(-a_max_y, a_max_y, levels)
    return [Accel2(float(x), float(y)) for x in ax for y in ay]


def device_layout(cfg: ScenarioConfig, seed: Optional[int] = None) -> np.ndarray:
    if cfg.device_positions is not None:
        return np.array(cfg.device_positions, dtype=float).reshape(-1, 2)
    rng = np.random.default_rng(cfg.layout_seed if seed is None else seed)
    xs = rng.uniform(0.0, cfg.arena_width, cfg.n_devices)
    ys = rng.uniform(0.0, cfg.arena_height, cfg.n_devices)
    return np.column_stack([xs, ys])


@dataclass
class EpisodeTrace:
    meta: dict
    records: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"record": "meta", **self.meta})]
        for rec in self.records:
            lines.append(json.dumps({k: rec[k] for k in TRACE_FIELDS}))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty trace")
        meta = json.loads(lines[0])
        if meta.pop("record", None) != "meta":
            raise ValueError("trace must start with a meta record")
        records = []
        for ln in lines[1:]:
            rec = json.loads(ln)
            missing = [k for k in TRACE_FIELDS if k not in rec]
            if missing:
                raise ValueError(f"trace record missing fields {missing}")
            records.append(rec)
        return cls(meta, records)

    @classmethod
    def load(cls, path) -> "EpisodeTrace":
        with open(path) as fh:
            return cls.from_jsonl(fh.read())


@dataclass
class EpisodeOutcome:
    reached_goal: bool
    visited_count: int
    mean_psnr_visited: float
    mean_psnr_all: float
    objective_value: float
    total_return: float
    no_visits: bool
    slots: int
    trace: Optional[EpisodeTrace] = None

    def summary(self) -> dict:
        return {
            "reached_goal": self.reached_goal,
            "visited_count": self.visited_count,
            "mean_psnr_visited": self.mean_psnr_visited,
            "mean_psnr_all": self.mean_psnr_all,
            "objective_value": self.objective_value,
            "total_return": self.total_return,
            "no_visits": self.no_visits,
            "slots": self.slots,
        }


class UAVDataCollectionEnv:
    def __init__(self, config: ScenarioConfig, record_trace: bool = True):
        self.cfg = config
        self.record_trace = record_trace
        self.actions = action_table(config.a_max_x, config.a_max_y, config.action_levels)
        self.n_actions = len(self.actions)
        self.state_dim = config.state_dim
        self._done = True

    # -- episode lifecycle -------------------------------------------------
    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        cfg = self.cfg
        self.devices = device_layout(cfg, seed)
        self.n_devices = len(self.devices)
        self.dev_states = [initial_state(cfg.latent) for _ in range(self.n_devices)]
        h = cfg.uav_altitude
        self.q = Position3(cfg.start[0], cfg.start[1], h)
        self.v = Velocity2(0.0, 0.0)
        self.q_fin = Position3(cfg.goal[0], cfg.goal[1], h)
        self.clock = MissionClock(cfg.horizon, cfg.slot_duration)
        self.queue = CommandQueue()
        self.last_accel = ZERO_ACCEL
        self.last_delay = 0
        self.reached = distance_2d(self.q, self.q_fin) <= cfg.goal_tolerance
        self._done = False
        self._mode = None
        self._d_goal = distance_2d(self.q, self.q_fin)
        self._rewards = []
        self._objective = 0.0
        self.trace = EpisodeTrace(self._meta()) if self.record_trace else None
        return self.observe()

    def _meta(self) -> dict:
        cfg = self.cfg
        return {
            "version": 1,
            "control": None,
            "tau": cfg.slot_duration,
            "horizon": cfg.horizon,
            "altitude": cfg.uav_altitude,
            "start": list(cfg.start),
            "goal": list(cfg.goal),
            "goal_tolerance": cfg.goal_tolerance,
            "a_max": [cfg.a_max_x, cfg.a_max_y],
            "v_max": cfg.v_max,
            "speed": None,
            "comm_range": cfg.channel.comm_range,
            "n_symbols": cfg.latent.n_symbols,
            "psnr_min": cfg.latent.psnr_min,
            "devices": self.devices.tolist(),
            "q0": list(self.q),
            "v0": list(self.v),
        }

    @property
    def t(self) -> int:
        return self.clock.t

    @property
    def done(self) -> bool:
        return self._done

    @property
    def statuses(self) -> list:
        return [s.status for s in self.dev_states]

    def observe(self) -> np.ndarray:
        cfg = self.cfg
        n = self.n_devices
        s = np.empty(2 * n + 6)
        s[0] = 2.0 * self.q[0] / cfg.arena_width - 1.0
        s[1] = 2.0 * self.q[1] / cfg.arena_height - 1.0
        s[2] = self.v[0] / cfg.v_norm
        s[3] = self.v[1] / cfg.v_norm
        np.clip(s[:4], -1.0, 1.0, out=s[:4])
        phi_max = cfg.latent.psnr_max
        for i, d in enumerate(self.dev_states):
            s[4 + i] = _STATUS_CODE[d.status]
            s[4 + n + i] = d.psnr / phi_max
        s[4 + 2 * n] = (cfg.horizon - self.clock.t) / cfg.horizon
        s[5 + 2 * n] = min(self.last_delay / cfg.horizon, 1.0)
        return s

    # -- channel helpers ---------------------------------------------------
    def bs_rate(self, q=None) -> float:
        cfg = self.cfg
        q = self.q if q is None else q
        bs = cfg.bs_position
        hd = math.hypot(q[0] - bs[0], q[1] - bs[1])
        pl = ch.path_loss_db(hd, q[2] - bs[2], cfg.channel)
        return ch.shannon_rate(cfg.bs_bandwidth, cfg.bs_tx_power, pl, cfg.channel.noise_power)

    def command_delay(self) -> int:
        cfg = self.cfg
        rate = self.bs_rate() if cfg.delay.mode == "payload" else 0.0
        return ch.command_delay_slots(cfg.delay, rate, cfg.slot_duration)

    def device_rate(self, i: int, bandwidth: float, q=None) -> float:
        cfg = self.cfg
        q = self.q if q is None else q
        dx, dy = self.devices[i]
        hd = math.hypot(q[0] - dx, q[1] - dy)
        pl = ch.path_loss_db(hd, q[2], cfg.channel)
        return ch.shannon_rate(bandwidth, cfg.device_tx_power, pl, cfg.channel.noise_power)

    # -- control -----------------------------------------------------------
    def step(self, action: int):
        """Issue discrete action ``action`` and advance one slot."""
        self._check_mode("accel")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action index {action} outside [0, {self.n_actions})")
        issued = self.actions[action]
        slot = self.clock.t + 1
        delay = self.command_delay()
        self.queue = enqueue_command(self.queue, slot, delay, issued)
        executed = active_acceleration(self.queue, slot, self.last_accel)
        self.queue = CommandQueue([e for e in self.queue.pending if e[0] > slot])
        q, v = step_kinematics(self.q, self.v, executed, self.cfg.slot_duration, self.cfg.v_max)
        self.last_accel = executed
        self.last_delay = delay
        return self._advance(q, v, executed, issued, delay)

    def step_towards(self, new_position, speed: float):
        """Advance one slot by placing the UAV at ``new_position`` directly.

        Used by the fixed-speed baselines, which bypass acceleration commands.
        """
        self._check_mode("fixed_speed", speed)
        tau = self.cfg.slot_duration
        q = Position3(float(new_position[0]), float(new_position[1]), self.q[2])
        v = Velocity2((q[0] - self.q[0]) / tau, (q[1] - self.q[1]) / tau)
        return self._advance(q, v, ZERO_ACCEL, ZERO_ACCEL, 0)

    def _check_mode(self, mode: str, speed: Optional[float] = None) -> None:
        if self._done:
            raise RuntimeError("episode is done; call reset()")
        if self._mode is None:
            self._mode = mode
            if self.trace is not None:
                self.trace.meta["control"] = mode
                self.trace.meta["speed"] = speed
        elif self._mode != mode:
            raise RuntimeError("cannot mix command and fixed-speed control in one episode")

    def _advance(self, q, v, executed, issued, delay):
        cfg = self.cfg
        self.clock.tick()
        self.q, self.v = q, v

        rng = cfg.channel.comm_range
        for i, d in enumerate(self.dev_states):
            dx, dy = self.devices[i]
            inside = math.sqrt((q[0] - dx) ** 2 + (q[1] - dy) ** 2 + q[2] ** 2) <= rng
            if d.status == UNTOUCHED and inside:
                self.dev_states[i] = d.__class__(d.received, SERVING, d.psnr, d.carry)
            elif d.status == SERVING and not inside:
                self.dev_states[i] = d.__class__(d.received, VISITED, d.psnr, d.carry)

        serving = [i for i, d in enumerate(self.dev_states) if d.status == SERVING]
        shares = ch.ofdma_split(cfg.device_bandwidth, serving)
        for i in serving:
            rate = self.device_rate(i, shares[i])
            self.dev_states[i] = deliver(self.dev_states[i], rate, cfg.slot_duration, cfg.latent)

        d_prev, d_now = self._d_goal, distance_2d(q, self.q_fin)
        self._d_goal = d_now
        just_reached = (not self.reached) and d_now <= cfg.goal_tolerance
        self.reached = self.reached or just_reached
        psnrs = [self.dev_states[i].psnr for i in serving]
        reward = compute_reward(
            psnrs, d_prev, d_now, just_reached,
            epsilon=cfg.reward_epsilon, beta=cfg.shaping_beta,
            d_diag=cfg.arena_diagonal, goal_bonus=cfg.goal_bonus,
        )
        if psnrs:
            self._objective += sum(psnrs) / len(psnrs)
        self._rewards.append(reward)
        self._done = self.clock.expired or self.reached

        if self.trace is not None:
            self.trace.records.append({
                "t": self.clock.t, "x": q[0], "y": q[1], "vx": v[0], "vy": v[1],
                "ax": executed[0], "ay": executed[1],
                "cmd_ax": issued[0], "cmd_ay": issued[1], "delay": int(delay),
                "serving": serving,
                "received": [d.received for d in self.dev_states],
                "psnr": [d.psnr for d in self.dev_states],
                "r_c": reward.r_c, "r_d": reward.r_d, "r_g": reward.r_g,
            })
        return self.observe(), reward, self._done

    # -- summary -----------------------------------------------------------
    def outcome(self) -> EpisodeOutcome:
        phi_min = curve_psnr(self.cfg.latent, 0)
        touched = [d for d in self.dev_states if d.status != UNTOUCHED]
        all_psnr = [d.psnr if d.status != UNTOUCHED else phi_min for d in self.dev_states]
        mean_all = float(np.mean(all_psnr)) if all_psnr else phi_min
        return EpisodeOutcome(
            reached_goal=bool(self.reached),
            visited_count=len(touched),
            mean_psnr_visited=float(np.mean([d.psnr for d in touched])) if touched else phi_min,
            mean_psnr_all=mean_all,
            objective_value=self._objective,
            total_return=float(sum(r.total for r in self._rewards)),
            no_visits=not touched,
            slots=self.clock.t,
            trace=self.trace,
        )

    def rollout(self, policy, seed: Optional[int] = None) -> EpisodeOutcome:
        """Run one episode with ``policy(state) -> action index``."""
        s = self.reset(seed)
        done = False
        while not done:
            s, _, done = self.step(policy(s))
        return self.outcome()
