"""Scenario presets, policy evaluation, sweeps and metric aggregation."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .baselines import BASELINES
from .config import ScenarioConfig, TrainConfig, config_from_dict, config_to_dict
from .ddqn import DDQNAgent, evaluate, train
from .env import EpisodeOutcome, UAVDataCollectionEnv, device_layout
from .semantics import curve_psnr

log = logging.getLogger(__name__)

BANDWIDTH_GRID = (5e3, 10e3, 15e3, 20e3, 25e3, 30e3, 35e3, 40e3)
VELOCITY_GRID = (3.0, 5.0, 7.0, 8.9, 11.0, 13.0, 15.0)
BASELINE_SPEED = 8.9

SWEEP_COLUMNS = (
    "axis", "value", "policy", "n",
    "mean_psnr_all", "std_psnr_all",
    "mean_psnr_visited", "std_psnr_visited",
    "visited_mean", "visited_std",
    "goal_rate", "no_visit_count", "seeds",
)


def field_scenario(**changes) -> ScenarioConfig:
    """Ten-device field scenario used for the PSNR comparisons.

    Uses the ``ScenarioConfig`` defaults for arena, device count, horizon,
    slot length, altitude, range, powers and noise. Adds a 15 m/s speed
    clamp, progress-shaping weight 500, start/goal anchors 600 m apart and a
    3000-episode training budget.
    """
    base = ScenarioConfig(
        start=(200.0, 300.0),
        goal=(800.0, 300.0),
        v_max=15.0,
        shaping_beta=500.0,
        train=TrainConfig(episodes=3000),
    )
    return base.replace(**changes) if changes else base


def corridor_scenario(**changes) -> ScenarioConfig:
    """One device 60 m off the straight start-goal line, outside the footprint."""
    base = field_scenario(
        device_positions=((500.0, 360.0),),
        train=TrainConfig(episodes=800),
    )
    return base.replace(**changes) if changes else base


def run_baseline(cfg: ScenarioConfig, policy: str, speed: float, layout_seed=None, record_trace=True) -> EpisodeOutcome:
    env = UAVDataCollectionEnv(cfg, record_trace=record_trace)
    return BASELINES[policy](env, speed, layout_seed)


def train_agent(
    cfg: ScenarioConfig,
    seed: int,
    episodes: Optional[int] = None,
    dtype=np.float64,
    layout_seed=None,
    on_episode=None,
):
    """Train a fresh agent on one fixed layout; returns (agent, curve, cfg).

    ``layout_seed`` pins the layout into the returned config so evaluation
    sees the same devices as training.
    """
    if layout_seed is not None and cfg.device_positions is None:
        cfg = cfg.replace(device_positions=tuple(map(tuple, device_layout(cfg, layout_seed))))
    env = UAVDataCollectionEnv(cfg, record_trace=False)
    agent = DDQNAgent(cfg.state_dim, cfg.n_actions, cfg.train, seed=seed, dtype=dtype)
    curve = train(env, agent, episodes=episodes, on_episode=on_episode)
    return agent, curve, cfg


def run_agent(cfg: ScenarioConfig, agent: DDQNAgent, record_trace=True) -> EpisodeOutcome:
    return evaluate(UAVDataCollectionEnv(cfg, record_trace=record_trace), agent)


@dataclass
class SweepPoint:
    axis: str
    value: float
    policy: str
    n: int
    mean_psnr_all: float
    std_psnr_all: float
    mean_psnr_visited: float
    std_psnr_visited: float
    visited_mean: float
    visited_std: float
    goal_rate: float
    no_visit_count: int
    seeds: str

    def row(self) -> dict:
        return {k: getattr(self, k) for k in SWEEP_COLUMNS}


def _mean_std(values) -> tuple:
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if len(a) > 1 else 0.0


def aggregate_metrics(outcomes: Sequence, axis: str = "", value: float = math.nan, policy: str = "", seeds=()) -> SweepPoint:
    """Mean and sample std of both PSNR conventions, visits and goal rate.

    Accepts EpisodeOutcome objects or their ``summary()`` dicts. Episodes
    with no visited device contribute the floor PSNR to the visited-device
    mean and are counted in ``no_visit_count``.
    """
    if not outcomes:
        raise ValueError("need at least one episode outcome")
    rows = [o.summary() if isinstance(o, EpisodeOutcome) else o for o in outcomes]
    m_all, s_all = _mean_std([r["mean_psnr_all"] for r in rows])
    m_vis, s_vis = _mean_std([r["mean_psnr_visited"] for r in rows])
    v_m, v_s = _mean_std([r["visited_count"] for r in rows])
    return SweepPoint(
        axis=axis, value=float(value), policy=policy, n=len(rows),
        mean_psnr_all=m_all, std_psnr_all=s_all,
        mean_psnr_visited=m_vis, std_psnr_visited=s_vis,
        visited_mean=v_m, visited_std=v_s,
        goal_rate=float(np.mean([bool(r["reached_goal"]) for r in rows])),
        no_visit_count=int(sum(bool(r["no_visits"]) for r in rows)),
        seeds=" ".join(str(s) for s in seeds),
    )


def derive_seed(master: int, point: int, replicate: int) -> int:
    return int(np.random.SeedSequence([master, point, replicate]).generate_state(1)[0])


def _episode_task(args) -> dict:
    kind, cfg_dict, policy, speed, layout_seed, train_seed, episodes, dtype = args
    cfg = config_from_dict(cfg_dict)
    if policy == "ddqn":
        agent, _, cfg = train_agent(cfg, train_seed, episodes, np.dtype(dtype), layout_seed)
        return run_agent(cfg, agent, record_trace=False).summary()
    return run_baseline(cfg, policy, speed, layout_seed, record_trace=False).summary()


def _map(tasks, workers: int):
    if workers <= 1:
        return [_episode_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_task, tasks))


def sweep(
    cfg: ScenarioConfig,
    axis: str,
    values: Sequence[float],
    policies: Sequence[str] = ("greedy", "tsp"),
    replicates: int = 1,
    master_seed: int = 0,
    speed: float = BASELINE_SPEED,
    episodes: Optional[int] = None,
    dtype: str = "float64",
    workers: int = 1,
) -> list:
    """Sweep device bandwidth or baseline cruise speed.

    Replicate ``r`` uses layout seed ``cfg.layout_seed + r`` (unless the
    layout is fixed) for every policy and every point. The learned policy is
    trained per replicate and per bandwidth point; it ignores cruise speed, so
    a velocity sweep trains it once per replicate and reuses the result.
    """
    if axis not in ("bandwidth", "velocity"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    layout_seeds = [cfg.layout_seed + r for r in range(replicates)]
    tasks, keys = [], []
    ddqn_cache = {}
    for p_idx, value in enumerate(values):
        point_cfg = cfg.replace(device_bandwidth=float(value)) if axis == "bandwidth" else cfg
        point_speed = float(value) if axis == "velocity" else speed
        for policy in policies:
            for r, ls in enumerate(layout_seeds):
                if policy == "ddqn":
                    train_point = p_idx if axis == "bandwidth" else 0
                    seed = derive_seed(master_seed, train_point, r)
                    task = ("episode", config_to_dict(point_cfg), "ddqn", None, ls, seed, episodes, dtype)
                    cache_key = (train_point, r)
                    if axis == "velocity" and cache_key in ddqn_cache:
                        keys.append((p_idx, value, policy, ls, ddqn_cache[cache_key]))
                        continue
                    ddqn_cache[cache_key] = len(tasks)
                else:
                    task = ("episode", config_to_dict(point_cfg), policy, point_speed, ls, None, None, dtype)
                keys.append((p_idx, value, policy, ls, len(tasks)))
                tasks.append(task)
    results = _map(tasks, workers)
    points = []
    for p_idx, value in enumerate(values):
        for policy in policies:
            group = [(ls, results[i]) for (pi, _, pol, ls, i) in keys if pi == p_idx and pol == policy]
            points.append(aggregate_metrics(
                [g[1] for g in group], axis, float(value), policy, seeds=[g[0] for g in group]
            ))
            log.info("%s=%g %s: psnr_all=%.2f", axis, value, policy, points[-1].mean_psnr_all)
    return points


def write_sweep_csv(points: Sequence[SweepPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for p in points:
            w.writerow(p.row())


def read_sweep_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SWEEP_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"sweep CSV lacks columns {missing}")
        rows = []
        for r in reader:
            rows.append({
                **r,
                "value": float(r["value"]),
                "n": int(r["n"]),
                **{k: float(r[k]) for k in SWEEP_COLUMNS[4:11]},
                "no_visit_count": int(r["no_visit_count"]),
            })
    return rows


def floor_psnr(cfg: ScenarioConfig) -> float:
    return curve_psnr(cfg.latent, 0)
