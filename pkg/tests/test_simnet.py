import random

import pytest

from gusreg.core import default_quorums
from gusreg.protocols import make_nodes
from gusreg.simnet import (
    ConfigError, Crash, FaultPlan, Invocation, LatencyModel, ScriptDirective, ScriptError,
    Simulator, StaticWorkload, latency_profile, message_delay, ms_to_ticks,
)
from gusreg.harness.fuzz import fuzz_scenario
from gusreg.harness.runner import simulate

from helpers import run_static


def test_table3_one_way_delays():
    m = latency_profile("table3", 5)
    assert m.base(1, 2) == ms_to_ticks(36)
    assert m.base(3, 5) == ms_to_ticks(110)
    assert m.base(2, 2) == 1  # 0.1 ms
    assert m.region(3) == "IR"
    assert all(m.base(i, j) == m.base(j, i) for i in range(1, 6) for j in range(1, 6))


def test_uniform_profile():
    m = latency_profile("uniform:10", 4)
    assert {m.base(i, j) for i in range(1, 5) for j in range(1, 5) if i != j} == {ms_to_ticks(5)}
    assert latency_profile("uniform", 3).base(1, 2) == ms_to_ticks(5)


@pytest.mark.parametrize("matrix", [[[1, 2], [2]], [[1, 0], [0, 1]], [[1, -3], [-3, 1]]])
def test_bad_matrix_rejected(matrix):
    with pytest.raises(ConfigError):
        latency_profile(matrix, 2)


def test_unknown_profile_and_size():
    with pytest.raises(ConfigError):
        latency_profile("mars", 3)
    with pytest.raises(ConfigError):
        latency_profile([[0.2, 5], [5, 0.2]], 3)


def test_message_delay_jitter():
    m = LatencyModel.table3(3)
    assert message_delay(m, 1, 2, random.Random(1)) == ms_to_ticks(36)
    j = LatencyModel.table3(3, jitter_ms=5)
    a = [message_delay(j, 1, 2, random.Random(9)) for _ in range(3)]
    rng1, rng2 = random.Random(4), random.Random(4)
    s1 = [message_delay(j, 1, 2, rng1) for _ in range(50)]
    s2 = [message_delay(j, 1, 2, rng2) for _ in range(50)]
    assert s1 == s2 and len(set(a)) == 1
    assert all(ms_to_ticks(36) <= d <= ms_to_ticks(41) for d in s1) and len(set(s1)) > 1


def test_same_seed_same_trace():
    scn = fuzz_scenario("gus", 3, 11)
    (r1, _, _), (r2, _, _) = simulate(scn), simulate(scn)
    assert r1.telemetry.trace_hash == r2.telemetry.trace_hash
    other = simulate(scn.model_copy(update={"seed": 12}))[0]
    assert other.telemetry.trace_hash != r1.telemetry.trace_hash


def test_single_read_latency_table3():
    nodes = make_nodes("gus", default_quorums(3))
    sim = Simulator(nodes, LatencyModel.table3(3))
    res = sim.run(StaticWorkload([Invocation(1, 1, "k", "read"), Invocation(3, 3, "k", "read")]))
    assert [e.latency_ms for e in res.history] == [72.0, 88.0]


class _Recorder:
    """Wraps a node to log the order messages arrive from each peer."""

    def __init__(self, sim):
        self.arrivals = []
        orig = sim._deliver

        def spy(src, dst, msg):
            self.arrivals.append((src, dst, msg))
            orig(src, dst, msg)
        sim._deliver = spy


def _sends_and_arrivals(fifo, seed):
    nodes = make_nodes("gus", default_quorums(3))
    sim = Simulator(nodes, LatencyModel.uniform(10, 3, jitter_ms=20), seed=seed, fifo=fifo)
    order = []
    orig_send = sim._send

    def send_spy(src, dst, msg):
        order.append((src, dst, msg))
        orig_send(src, dst, msg)
    sim._send = send_spy
    rec = _Recorder(sim)
    invs = [Invocation(c, (c - 1) % 3 + 1, "k", "write" if c % 2 else "read", at_ms=c) for c in range(1, 7)]
    sim.run(StaticWorkload(invs))
    return order, rec.arrivals


def _reordered(order, arrivals):
    for pair in {(s, d) for s, d, _ in order}:
        sent = [id(m) for s, d, m in order if (s, d) == pair]
        got = [id(m) for s, d, m in arrivals if (s, d) == pair]
        if sent != got:
            return True
    return False


def test_fifo_preserves_channel_order():
    for seed in range(5):
        assert not _reordered(*_sends_and_arrivals(True, seed))


def test_non_fifo_reorders_for_some_seed():
    assert any(_reordered(*_sends_and_arrivals(False, seed)) for seed in range(20))


def test_crash_stops_node():
    invs = [Invocation(1, 1, "k", "write", "x", at_ms=0), Invocation(3, 3, "k", "write", "y", at_ms=10)]
    sim, res = run_static("gus", 3, invs, crashes=[Crash(3, at_ms=5)])
    assert res.telemetry.crashed == [3]
    assert len(res.history) == 1  # node 3's client died with it
    assert res.telemetry.dropped_crash > 0 and res.live
    assert res.telemetry.conserved


def test_crash_no_delivery_from_crashed_node_after_crash():
    # every message delivered after the crash tick must have been sent earlier
    invs = [Invocation(c, c, "k", "write", at_ms=3 * c) for c in (1, 2, 3)]
    nodes = make_nodes("gus", default_quorums(3))
    sim = Simulator(nodes, LatencyModel.uniform(10, 3), faults=FaultPlan((Crash(2, at_ms=4),)))
    sent_at = {}
    orig_send, orig_deliver = sim._send, sim._deliver
    late = []

    def send_spy(src, dst, msg):
        sent_at[id(msg), dst] = sim.now
        orig_send(src, dst, msg)

    def deliver_spy(src, dst, msg):
        if src == 2 and sent_at[id(msg), dst] > ms_to_ticks(4):
            late.append(msg)
        orig_deliver(src, dst, msg)
    sim._send, sim._deliver = send_spy, deliver_spy
    sim.run(StaticWorkload(invs))
    assert not late
    assert sim.telemetry.dropped_crash > 0


def test_fault_plan_bounded_by_f():
    with pytest.raises(ConfigError):
        FaultPlan((Crash(1, at_ms=1), Crash(2, at_ms=1))).validate(3, 1)
    with pytest.raises(ConfigError):
        FaultPlan((Crash(1, at_ms=1), Crash(1, at_ms=2))).validate(5, 2)
    with pytest.raises(ConfigError):
        Crash(1)


def test_conservation_under_script_and_crash():
    for seed in range(10):
        res = simulate(fuzz_scenario("gus", 5, seed))[0]
        assert res.telemetry.conserved
    invs = [Invocation(1, 1, "k", "write", "x")]
    _, res = run_static("gus", 3, invs, script=[ScriptDirective("drop", src=1, kind="update-view")])
    t = res.telemetry
    assert t.dropped_script == 3 and t.conserved
    assert t.delivered + t.dropped_script + t.dropped_crash == t.total_sent


def test_drop_update_view_from_node():
    invs = [Invocation(2, 2, "k", "write", "x")]
    sim, _ = run_static("gus", 3, invs, script=[ScriptDirective("drop", src=2, kind="update-view")])
    for nid in (1, 3):
        assert all(t.ts == 0 for t in sim.nodes[nid].state("k").view[2])


def test_unmatched_directive_raises():
    with pytest.raises(ScriptError, match="never matched"):
        run_static("gus", 3, [Invocation(1, 1, "k", "read")],
                   script=[ScriptDirective("drop", src=1, kind="commit-write")])


def test_hold_until_releases_after_label():
    invs = [Invocation(1, 1, "k", "write", "x", label="w"),
            Invocation(2, 2, "k", "read", at_ms=100, label="r")]
    script = [ScriptDirective("hold_until", src=1, dst=3, kind="write", until="r")]
    sim, res = run_static("gus", 3, invs, script=script)
    assert sim.nodes[3].state("k").cur.ts == 1  # delivered once r finished
    assert res.telemetry.held_undelivered == 0


def test_deliver_at_and_delay():
    invs = [Invocation(1, 1, "k", "write", "x", label="w")]
    script = [ScriptDirective("deliver_at", src=1, dst=2, kind="write", at_ms=50),
              ScriptDirective("delay", src=1, dst=3, kind="write", delay_ms=100)]
    _, res = run_static("gus", 3, invs, script=script)
    # the two remote acks come back at 55 and 110 ms; the quorum needs one of them
    assert res.history[0].latency_ms == 55.0


def test_occurrence_picks_kth_message():
    d = ScriptDirective("drop", src=1, kind="write", occurrence=2)
    invs = [Invocation(1, 1, "k", "write", "x")]
    sim, res = run_static("gus", 3, invs, script=[d])
    assert res.telemetry.dropped_script == 1


def test_bad_directive():
    with pytest.raises(ConfigError):
        ScriptDirective("explode")
    with pytest.raises(ConfigError):
        ScriptDirective("hold_until")


def test_liveness_failure_reported():
    # both remote copies of the write vanish, so the write can never finish
    script = [ScriptDirective("drop", src=1, dst=d, kind="write") for d in (2, 3)]
    _, res = run_static("gus", 3, [Invocation(1, 1, "k", "write", "x")], script=script)
    assert not res.live and res.telemetry.blocked == [1]
