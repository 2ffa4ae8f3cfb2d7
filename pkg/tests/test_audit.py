import copy

import pytest

from uavsem.audit import audit_trace
from uavsem.channel import DelayModel
from uavsem.config import ScenarioConfig
from uavsem.env import EpisodeTrace, UAVDataCollectionEnv


@pytest.fixture
def compliant_trace():
    cfg = ScenarioConfig(
        device_positions=((160.0, 300.0),), start=(100.0, 300.0), goal=(220.0, 300.0),
        delay=DelayModel("zero"),
    )
    env = UAVDataCollectionEnv(cfg)
    env.reset()
    for a in [7] * 6 + [4] * 200:
        env.step(a)
        if env.done:
            break
    return env.outcome().trace


def test_compliant_trace_is_clean(compliant_trace):
    assert compliant_trace.records[-1]["t"] < 250
    assert audit_trace(compliant_trace).violations == []


def test_non_contiguous_service_flagged(compliant_trace):
    tr = copy.deepcopy(compliant_trace)
    for rec in tr.records:
        rec["serving"] = [0] if 5 <= rec["t"] <= 9 or rec["t"] == 14 else []
    rep = audit_trace(tr)
    assert len(rep.contiguity) == 1
    assert not rep.ok


def test_terminal_miss_flagged(compliant_trace):
    tr = copy.deepcopy(compliant_trace)
    tr.meta["goal"] = [tr.records[-1]["x"] + 30.0, tr.records[-1]["y"]]
    assert len(audit_trace(tr).terminal) == 1


def test_out_of_bounds_acceleration_flagged(compliant_trace):
    tr = copy.deepcopy(compliant_trace)
    tr.records[0]["ax"] = 4.0
    rep = audit_trace(tr)
    assert rep.acceleration
    assert rep.replay  # the logged positions no longer follow from the commands


def test_tampered_position_breaks_replay(compliant_trace):
    tr = copy.deepcopy(compliant_trace)
    tr.records[3]["x"] += 1e-9
    assert audit_trace(tr).replay


def test_malformed_trace_rejected():
    with pytest.raises(ValueError):
        audit_trace(EpisodeTrace({"tau": 0.5}, []))
    with pytest.raises(ValueError):
        EpisodeTrace.from_jsonl('{"t": 1}\n')
