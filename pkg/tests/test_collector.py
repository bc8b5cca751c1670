import numpy as np
import pytest

from mibids.errors import AgentError, NoSuchObject, SnmpTimeout, StreamTerminated
from mibids.schema import CounterSnapshot
from mibids.snmp.agent import LoopbackAgent
from mibids.snmp.ber import NO_SUCH_INSTANCE
from mibids.snmp.collector import poll, stream

COUNTERS = (100, 200, 3, 40, 5, 6, 70, 8)


def test_poll_returns_agent_counters():
    with LoopbackAgent([COUNTERS]) as agent:
        snap = poll(agent.address, "public", 2, timeout=1.0)
    assert snap.counters == COUNTERS and snap.if_index == 2


def test_poll_agent_error():
    with LoopbackAgent([COUNTERS], error_status={0: (2, 5)}) as agent:
        with pytest.raises(AgentError) as e:
            poll(agent.address, "public", 1, timeout=1.0)
    assert (e.value.status, e.value.index) == (2, 5)


def test_poll_no_such_object():
    with LoopbackAgent([COUNTERS], override={0: NO_SUCH_INSTANCE}) as agent:
        with pytest.raises(NoSuchObject):
            poll(agent.address, "public", 1, timeout=1.0)


def test_poll_retries_then_times_out():
    with LoopbackAgent([COUNTERS], community="other") as agent:
        with pytest.raises(SnmpTimeout):
            poll(agent.address, "public", 1, timeout=0.1)
        assert agent.requests == 3


def test_poll_retry_succeeds_after_drop():
    with LoopbackAgent([COUNTERS], drop={0, 1}) as agent:
        snap = poll(agent.address, "public", 1, timeout=0.1)
        assert agent.requests == 3
    assert snap.counters == COUNTERS


class FakeClock:
    def __init__(self):
        self.t = 1000.0

    def __call__(self):
        return self.t

    def sleep(self, dt):
        self.t += dt


def scripted_poller(clock, script):
    """script: list of counter tuples or None (timeout)."""
    it = iter(script)

    def poller():
        item = next(it)
        if item is None:
            raise SnmpTimeout("scripted")
        return CounterSnapshot(clock(), 1, item)

    return poller


def test_stream_two_snapshots():
    clock = FakeClock()
    recs = list(stream(None, "public", 1, 15, poller=scripted_poller(clock, [(100,) * 8, (160,) * 8]),
                       sleep=clock.sleep, clock=clock, max_records=1))
    assert len(recs) == 1 and recs[0].values == (4.0,) * 8


def test_stream_skips_gap():
    clock = FakeClock()
    script = [(0,) * 8, (15,) * 8, None, (45,) * 8, (60,) * 8]
    recs = list(stream(None, "c", 1, 15, poller=scripted_poller(clock, script),
                       sleep=clock.sleep, clock=clock, max_records=2))
    # record 1: polls 0->1; poll 2 missed; poll 3 has no adjacent predecessor; record 2: polls 3->4
    assert [r.values[0] for r in recs] == [1.0, 1.0]


def test_stream_terminates_after_five_timeouts():
    clock = FakeClock()
    script = [(0,) * 8] + [None] * 5
    with pytest.raises(StreamTerminated):
        list(stream(None, "c", 1, 15, poller=scripted_poller(clock, script), sleep=clock.sleep, clock=clock))


def test_stream_over_loopback():
    rows = [tuple(v * n for v in (1500, 300, 0, 30, 15, 0, 60, 0)) for n in range(4)]
    clock = FakeClock()
    with LoopbackAgent(rows) as agent:
        recs = list(stream(agent.address, "public", 1, 10, timeout=1.0, sleep=clock.sleep, clock=clock,
                           max_records=3))
    for r in recs:
        assert np.allclose(r.values, (150, 30, 0, 3, 1.5, 0, 6, 0))
        assert all(v >= 0 for v in r.values)
