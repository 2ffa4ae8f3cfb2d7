"""UAV point-mass kinematics, mission clock and the delayed command queue."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional


class Position3(NamedTuple):
    x: float
    y: float
    z: float = 0.0


class Velocity2(NamedTuple):
    vx: float
    vy: float


class Accel2(NamedTuple):
    ax: float
    ay: float


ZERO_ACCEL = Accel2(0.0, 0.0)


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"non-finite kinematic input: {v!r}")


def clamp_speed(vx: float, vy: float, v_max: Optional[float]) -> tuple[float, float]:
    if v_max is None:
        return vx, vy
    speed = math.hypot(vx, vy)
    if speed > v_max:
        s = v_max / speed
        return vx * s, vy * s
    return vx, vy


def step_kinematics(
    q: Position3,
    v: Velocity2,
    a: Accel2,
    tau: float,
    v_max: Optional[float] = None,
) -> tuple[Position3, Velocity2]:
    """Advance one slot with semi-implicit Euler.

    Velocity is updated first and the *updated* velocity moves the position,
    so that ``v' = a*tau + v`` and ``q' = v'*tau + q``. Altitude is carried
    through unchanged.
    """
    _check_finite(q[0], q[1], q[2], v[0], v[1], a[0], a[1], tau)
    if tau <= 0:
        raise ValueError("slot duration must be positive")
    vx = a[0] * tau + v[0]
    vy = a[1] * tau + v[1]
    vx, vy = clamp_speed(vx, vy, v_max)
    return Position3(vx * tau + q[0], vy * tau + q[1], q[2]), Velocity2(vx, vy)


def distance_3d(p, q) -> float:
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2)


def distance_2d(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


@dataclass
class MissionClock:
    horizon: int
    slot_duration: float
    t: int = 0

    def __post_init__(self):
        if self.horizon < 1 or self.slot_duration <= 0:
            raise ValueError("horizon must be >= 1 and slot_duration > 0")

    @property
    def duration(self) -> float:
        return self.horizon * self.slot_duration

    @property
    def remaining(self) -> float:
        return (self.horizon - self.t) * self.slot_duration

    @property
    def expired(self) -> bool:
        return self.t >= self.horizon

    def tick(self) -> int:
        if self.t >= self.horizon:
            raise RuntimeError("mission clock already at horizon")
        self.t += 1
        return self.t


@dataclass
class CommandQueue:
    """Pending acceleration commands keyed by the slot at which they execute.

    ``pending`` is kept sorted by execution slot. Only the newest command per
    execution slot survives, and a fresher command that arrives before an
    older pending one supersedes it.
    """

    pending: list = field(default_factory=list)

    def copy(self) -> "CommandQueue":
        return CommandQueue(list(self.pending))


def enqueue_command(queue: CommandQueue, issued_at: int, delay_slots: int, a: Accel2) -> CommandQueue:
    if delay_slots < 0:
        raise ValueError("delay_slots must be non-negative")
    execute_at = int(issued_at) + int(delay_slots)
    # older commands scheduled at or after the new one are stale
    kept = [(s, c) for (s, c) in queue.pending if s < execute_at]
    kept.append((execute_at, Accel2(*a)))
    return CommandQueue(kept)


def active_acceleration(queue: CommandQueue, t: int, previous: Accel2) -> Accel2:
    best = None
    for s, c in queue.pending:
        if s <= t:
            best = c
        else:
            break
    return previous if best is None else best


def pop_executed(queue: CommandQueue, t: int) -> CommandQueue:
    """Drop commands already executed at or before slot ``t`` except the newest."""
    executed = [e for e in queue.pending if e[0] <= t]
    future = [e for e in queue.pending if e[0] > t]
    return CommandQueue(executed[-1:] + future)
