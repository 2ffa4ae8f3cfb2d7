"""Post-hoc constraint checks on a recorded episode trace."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .env import TRACE_FIELDS, EpisodeTrace
from .world import Accel2, Position3, Velocity2, step_kinematics

_ACCEL_TOL = 1e-12


@dataclass
class AuditReport:
    contiguity: list = field(default_factory=list)
    terminal: list = field(default_factory=list)
    acceleration: list = field(default_factory=list)
    replay: list = field(default_factory=list)
    monotonicity: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return self.contiguity + self.terminal + self.acceleration + self.replay + self.monotonicity

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_trace(trace: EpisodeTrace) -> AuditReport:
    """Check service contiguity, terminal position, acceleration bounds and
    bit-exact kinematic replay of a completed episode."""
    meta, records = trace.meta, trace.records
    for key in ("tau", "goal", "goal_tolerance", "devices", "q0", "v0", "control"):
        if key not in meta:
            raise ValueError(f"malformed trace: meta lacks {key!r}")
    if not records:
        raise ValueError("malformed trace: no slot records")
    for rec in records:
        if any(k not in rec for k in TRACE_FIELDS):
            raise ValueError(f"malformed trace record at t={rec.get('t')}")

    report = AuditReport()
    n_dev = len(meta["devices"])

    slots_by_device = {n: [] for n in range(n_dev)}
    for rec in records:
        for n in rec["serving"]:
            slots_by_device[n].append(rec["t"])
    for n, slots in slots_by_device.items():
        if slots and slots[-1] - slots[0] + 1 != len(slots):
            report.contiguity.append(f"device {n} served in non-contiguous slots {slots}")

    last = records[-1]
    gx, gy = meta["goal"]
    miss = math.hypot(last["x"] - gx, last["y"] - gy)
    if miss > meta["goal_tolerance"]:
        report.terminal.append(
            f"final position {miss:.3f} m from goal exceeds tolerance {meta['goal_tolerance']}"
        )

    prev_received = [0] * n_dev
    for rec in records:
        for n, (a, b) in enumerate(zip(prev_received, rec["received"])):
            if b < a:
                report.monotonicity.append(f"device {n} received count fell at t={rec['t']}")
        prev_received = rec["received"]

    tau = meta["tau"]
    if meta["control"] == "fixed_speed":
        budget = meta["speed"] * tau * (1 + 1e-12)
        px, py = meta["q0"][0], meta["q0"][1]
        for rec in records:
            if math.hypot(rec["x"] - px, rec["y"] - py) > budget:
                report.replay.append(f"t={rec['t']}: displacement exceeds speed*tau")
            px, py = rec["x"], rec["y"]
        return report

    ax_max, ay_max = meta["a_max"]
    q = Position3(*meta["q0"])
    v = Velocity2(*meta["v0"])
    for rec in records:
        a = Accel2(rec["ax"], rec["ay"])
        if abs(a.ax) > ax_max + _ACCEL_TOL or abs(a.ay) > ay_max + _ACCEL_TOL:
            report.acceleration.append(f"t={rec['t']}: acceleration {tuple(a)} out of bounds")
        q, v = step_kinematics(q, v, a, tau, meta.get("v_max"))
        if (q.x, q.y, v.vx, v.vy) != (rec["x"], rec["y"], rec["vx"], rec["vy"]):
            report.replay.append(f"t={rec['t']}: replayed state differs from log")
    return report
