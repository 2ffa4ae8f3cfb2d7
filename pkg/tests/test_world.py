import math

import pytest
from hypothesis import given, strategies as st

from uavsem.world import (
    Accel2,
    CommandQueue,
    MissionClock,
    Position3,
    Velocity2,
    active_acceleration,
    distance_3d,
    enqueue_command,
    step_kinematics,
)


def test_single_step_from_rest():
    q, v = step_kinematics(Position3(0, 0, 100), Velocity2(0, 0), Accel2(1, 0), 0.5)
    assert v == (0.5, 0.0)
    assert q == (0.25, 0.0, 100)


def test_pure_drift():
    q, v = step_kinematics(Position3(10, 5, 100), Velocity2(2, -1), Accel2(0, 0), 0.5)
    assert v == (2, -1)
    assert q == (11, 4.5, 100)


def _loop_oracle(a, tau, k):
    # independent per-step summation: displacement of step j is (j*a*tau)*tau
    return sum((j * a * tau) * tau for j in range(1, k + 1))


def test_constant_acceleration_ten_steps():
    q, v = Position3(0.0, 0.0, 100.0), Velocity2(0.0, 0.0)
    for _ in range(10):
        q, v = step_kinematics(q, v, Accel2(1.0, 1.0), 0.5)
    assert _loop_oracle(1.0, 0.5, 10) == 13.75
    assert q.x == pytest.approx(13.75, rel=1e-9)
    assert q.y == pytest.approx(13.75, rel=1e-9)
    assert q.z == 100.0


@given(
    a=st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3),
    tau=st.floats(0.05, 2.0),
    k=st.integers(1, 300),
)
def test_closed_form_matches(a, tau, k):
    q, v = Position3(0.0, 0.0, 50.0), Velocity2(0.0, 0.0)
    for _ in range(k):
        q, v = step_kinematics(q, v, Accel2(a, -a), tau)
    expected = a * tau**2 * k * (k + 1) / 2
    assert q.x == pytest.approx(expected, rel=1e-9)
    assert q.y == pytest.approx(-expected, rel=1e-9)
    assert q.z == 50.0


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=100))
def test_speed_clamp_holds(accels):
    q, v = Position3(0, 0, 100), Velocity2(0, 0)
    for a in accels:
        q, v = step_kinematics(q, v, Accel2(*a), 0.5, v_max=4.0)
        assert math.hypot(*v) <= 4.0 + 1e-12


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        step_kinematics(Position3(0, 0, 0), Velocity2(math.nan, 0), Accel2(0, 0), 0.5)
    with pytest.raises(ValueError):
        step_kinematics(Position3(0, 0, 0), Velocity2(0, 0), Accel2(math.inf, 0), 0.5)


def test_enqueue_schedules_at_issue_plus_delay():
    q = enqueue_command(CommandQueue(), 3, 0, Accel2(1, 0))
    assert q.pending == [(3, (1, 0))]
    q = enqueue_command(CommandQueue(), 3, 2, Accel2(1, 0))
    assert q.pending == [(5, (1, 0))]


def test_collision_keeps_later_issued():
    q = enqueue_command(CommandQueue(), 3, 2, Accel2(1, 0))
    q = enqueue_command(q, 4, 1, Accel2(0, 1))
    assert q.pending == [(5, (0, 1))]


def test_fresher_command_supersedes_later_scheduled_one():
    q = enqueue_command(CommandQueue(), 3, 4, Accel2(1, 0))
    q = enqueue_command(q, 4, 1, Accel2(0, 1))
    assert q.pending == [(5, (0, 1))]


def test_active_acceleration():
    q = CommandQueue([(5, Accel2(1, 0))])
    assert active_acceleration(q, 4, Accel2(0, 0)) == (0, 0)
    assert active_acceleration(q, 5, Accel2(0, 0)) == (1, 0)
    q = CommandQueue([(2, Accel2(1, 0)), (5, Accel2(0, 1))])
    assert active_acceleration(q, 7, Accel2(0, 0)) == (0, 1)


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 6)), min_size=1, max_size=30))
def test_command_causality(cmds):
    q = CommandQueue()
    issued = []
    for k, (t, d) in enumerate(sorted(cmds)):
        a = Accel2(float(k + 1), 0.0)
        q = enqueue_command(q, t, d, a)
        issued.append((t + d, a))
        assert [s for s, _ in q.pending] == sorted(s for s, _ in q.pending)
    for t in range(0, 60):
        a = active_acceleration(q, t, Accel2(0.0, 0.0))
        if a != (0.0, 0.0):
            assert any(s <= t and c == a for s, c in issued)


def test_distance_3d():
    assert distance_3d((0, 0, 0), (0, 0, 0)) == 0
    assert distance_3d((0, 0, 100), (30, 0, 0)) == pytest.approx(104.40306508910550)
    assert distance_3d((7, 7, 100), (7, 7, 0)) == 100


def test_mission_clock():
    c = MissionClock(250, 0.5)
    assert c.duration == 125.0
    for _ in range(250):
        c.tick()
    assert c.expired
    with pytest.raises(RuntimeError):
        c.tick()
