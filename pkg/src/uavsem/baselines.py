"""Fixed-speed comparison policies: nearest-unvisited greedy and a
precomputed path-TSP tour, plus the tour solver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .env import EpisodeOutcome, UAVDataCollectionEnv
from .semantics import VISITED

SAFETY_FACTOR = 1.1
HELD_KARP_MAX = 15


@dataclass(frozen=True)
class TourPlan:
    order: tuple
    start: tuple
    end: tuple
    length: float


@dataclass
class FixedSpeedController:
    speed: float
    waypoint: Optional[tuple] = None

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("cruise speed must be positive")


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def path_length(start, points: Sequence, order: Sequence[int], end) -> float:
    legs = [tuple(start)] + [tuple(points[i]) for i in order] + [tuple(end)]
    return float(sum(_dist(a, b) for a, b in zip(legs, legs[1:])))


def _held_karp(start, pts: np.ndarray, end) -> list:
    n = len(pts)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    d_start = np.hypot(pts[:, 0] - start[0], pts[:, 1] - start[1])
    d_end = np.hypot(pts[:, 0] - end[0], pts[:, 1] - end[1])
    full = 1 << n
    cost = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int64)
    for j in range(n):
        cost[1 << j, j] = d_start[j]
    bits = 1 << np.arange(n)
    # masks only grow by one bit per transition, so increasing order is topological
    for mask in range(1, full):
        ends = np.nonzero(mask & bits)[0]
        if len(ends) < 2:
            continue
        for j in ends:
            prev = mask ^ (1 << j)
            cand = cost[prev] + d[:, j]
            i = int(np.argmin(cand))
            cost[mask, j] = cand[i]
            parent[mask, j] = i
    total = cost[full - 1] + d_end
    j = int(np.argmin(total))
    order, mask = [], full - 1
    while j >= 0:
        order.append(j)
        mask, j = mask ^ (1 << j), int(parent[mask, j])
    return order[::-1]


def _nearest_neighbour_2opt(start, pts: np.ndarray, end) -> list:
    left = list(range(len(pts)))
    order, cur = [], tuple(start)
    while left:
        k = min(left, key=lambda i: (_dist(cur, pts[i]), i))
        order.append(k)
        left.remove(k)
        cur = tuple(pts[k])
    nodes = [tuple(start)] + [tuple(p) for p in pts] + [tuple(end)]
    path = [0] + [i + 1 for i in order] + [len(pts) + 1]
    improved = True
    while improved:
        improved = False
        for i in range(1, len(path) - 2):
            for k in range(i + 1, len(path) - 1):
                a, b = nodes[path[i - 1]], nodes[path[i]]
                c, e = nodes[path[k]], nodes[path[k + 1]]
                delta = _dist(a, c) + _dist(b, e) - _dist(a, b) - _dist(c, e)
                if delta < -1e-9:
                    path[i:k + 1] = path[i:k + 1][::-1]
                    improved = True
    return [p - 1 for p in path[1:-1]]


def solve_path_tsp(start, devices, end) -> TourPlan:
    """Shortest open path start -> every device -> end.

    Exact Held-Karp up to 15 devices, nearest neighbour plus 2-opt beyond.
    """
    pts = np.asarray(devices, dtype=float).reshape(-1, 2)
    start, end = tuple(map(float, start[:2])), tuple(map(float, end[:2]))
    if len(pts) == 0:
        order = []
    elif len(pts) <= HELD_KARP_MAX:
        order = _held_karp(start, pts, end)
    else:
        order = _nearest_neighbour_2opt(start, pts, end)
    return TourPlan(tuple(order), start, end, path_length(start, pts, order, end))


def fixed_speed_step(controller: FixedSpeedController, q_uav, waypoint, tau: float) -> tuple:
    """Move straight toward ``waypoint`` by at most ``speed * tau``."""
    budget = controller.speed * tau
    dx, dy = waypoint[0] - q_uav[0], waypoint[1] - q_uav[1]
    dist = math.hypot(dx, dy)
    if dist <= budget:
        return (float(waypoint[0]), float(waypoint[1]))
    s = budget / dist
    return (q_uav[0] + dx * s, q_uav[1] + dy * s)


def _detour_feasible(q_uav, target, q_fin, remaining_time: float, speed: float) -> bool:
    detour = _dist(q_uav, target) + _dist(target, q_fin)
    return SAFETY_FACTOR * detour / speed < remaining_time


def greedy_next_target(q_uav, unvisited: dict, q_fin, remaining_time: float, speed: float):
    """Pick the nearest unvisited device, or the goal when none remain or the
    detour would no longer leave time to reach the goal.

    ``unvisited`` maps device index to its (x, y). Returns ``(index, waypoint)``
    with ``index=None`` when heading for the goal.
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    goal = (float(q_fin[0]), float(q_fin[1]))
    if not unvisited:
        return None, goal
    n = min(unvisited, key=lambda i: (_dist(q_uav, unvisited[i]), i))
    if _detour_feasible(q_uav, unvisited[n], q_fin, remaining_time, speed):
        return n, tuple(map(float, unvisited[n]))
    return None, goal


def _run(env: UAVDataCollectionEnv, speed: float, choose, seed=None) -> EpisodeOutcome:
    env.reset(seed)
    ctrl = FixedSpeedController(speed)
    tau = env.cfg.slot_duration
    reached = set()
    done = False
    while not done:
        remaining = (env.cfg.horizon - env.t) * tau
        idx, ctrl.waypoint = choose(env, reached, remaining)
        nxt = fixed_speed_step(ctrl, env.q, ctrl.waypoint, tau)
        if idx is not None and nxt == ctrl.waypoint:
            reached.add(idx)
        _, _, done = env.step_towards(nxt, speed)
    return env.outcome()


def run_greedy(env: UAVDataCollectionEnv, speed: float, seed=None) -> EpisodeOutcome:
    def choose(env, reached, remaining):
        statuses = env.statuses
        unvisited = {
            i: tuple(env.devices[i]) for i in range(env.n_devices)
            if statuses[i] != VISITED and i not in reached
        }
        return greedy_next_target(env.q, unvisited, env.q_fin, remaining, speed)

    return _run(env, speed, choose, seed)


def run_tsp(env: UAVDataCollectionEnv, speed: float, seed=None) -> EpisodeOutcome:
    plan = {}

    def choose(env, reached, remaining):
        if "tour" not in plan:
            plan["tour"] = solve_path_tsp(env.q, env.devices, env.q_fin)
        statuses = env.statuses
        goal = (env.q_fin[0], env.q_fin[1])
        for i in plan["tour"].order:
            if statuses[i] == VISITED or i in reached:
                continue
            target = tuple(map(float, env.devices[i]))
            if _detour_feasible(env.q, target, env.q_fin, remaining, speed):
                return i, target
            return None, goal
        return None, goal

    return _run(env, speed, choose, seed)


def run_straight(env: UAVDataCollectionEnv, speed: float, seed=None) -> EpisodeOutcome:
    """Fly straight from start to goal at constant speed, ignoring devices."""
    return _run(env, speed, lambda env, reached, remaining: (None, (env.q_fin[0], env.q_fin[1])), seed)


BASELINES = {"greedy": run_greedy, "tsp": run_tsp, "straight": run_straight}
