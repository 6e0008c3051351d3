import random

import pytest
from pydantic import ValidationError

from gusreg.core import QuorumError
from gusreg.harness import stats as st
from gusreg.harness.records import CsvFormatError, FIELDS, read_csv, to_history, to_records, write_csv
from gusreg.harness.runner import run_scenario
from gusreg.harness.scenario import Scenario, default_completed_flag
from gusreg.harness.workload import HOT_KEY, gen_workload, place_clients
from gusreg.lincheck import check_all


def small(**kw):
    base = dict(n=3, clients_per_node=2, duration_ms=3000, warmup_ms=0, cooldown_ms=0,
                workload={"write_ratio": 0.3, "conflict_rate": 0.2, "key_space": 2})
    base.update(kw)
    return Scenario(**base)


# scenario validation


def test_scenario_defaults():
    s = Scenario()
    assert (s.protocol, s.n, s.duration_ms, s.warmup_ms, s.cooldown_ms) == ("gus", 3, 10_000, 1_000, 1_000)
    assert s.quorum_config().q_read == 2


@pytest.mark.parametrize("bad, field", [
    ({"protocol": "paxos"}, "protocol"),
    ({"workload": {"write_ratio": 1.5}}, "workload.write_ratio"),
    ({"bogus": 1}, "bogus"),
    ({"toggles": {"jitter_ms": -1}}, "toggles.jitter_ms"),
])
def test_scenario_field_errors(bad, field):
    with pytest.raises(ValidationError) as info:
        Scenario(**bad)
    locs = {".".join(str(x) for x in e["loc"]) for e in info.value.errors()}
    assert field in locs


def test_scenario_semantic_errors():
    with pytest.raises(ValidationError, match="both q_read and q_write"):
        Scenario(q_read=2)
    with pytest.raises(ValidationError, match="only applies to protocol gus"):
        Scenario(protocol="abd", toggles={"n45_completed_flag": True})
    with pytest.raises(ValidationError, match="f = 1"):
        Scenario(faults=[{"node": 1, "at_ms": 1}, {"node": 2, "at_ms": 1}])
    with pytest.raises((ValidationError, QuorumError)):
        Scenario(n=7, q_read=4, q_write=3)
    with pytest.raises((ValidationError, QuorumError)):
        Scenario(n=7)  # needs f for relaxed quorums


def test_relaxed_scenario():
    s = Scenario(n=9, f=2, latency="uniform:20")
    cfg = s.quorum_config()
    assert (cfg.q_read, cfg.q_write) == (5, 7)
    assert Scenario(n=9, f=2, quorum_bias="write", latency="uniform:20").quorum_config().q_write == 6


def test_completed_flag_defaults():
    assert [default_completed_flag(n) for n in (3, 4, 5)] == [False, False, True]
    assert Scenario(n=5, latency="table3").completed_flag()
    assert not Scenario(n=5, latency="table3", toggles={"n45_completed_flag": False}).completed_flag()


def test_scenario_load_yaml_and_json(tmp_path):
    y = tmp_path / "s.yaml"
    y.write_text("name: t\nn: 3\nworkload:\n  write_ratio: 0.5\n")
    j = tmp_path / "s.json"
    j.write_text('{"name": "t", "n": 3, "workload": {"write_ratio": 0.5}}')
    assert Scenario.load(y) == Scenario.load(j)


# workload


def test_place_clients():
    cs = place_clients(3, 2)
    assert [(c.id, c.node) for c in cs] == [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (6, 3)]


def _draw(scn, count, seed=1):
    gen = gen_workload(scn, random.Random(seed))
    return [next(gen) for _ in range(count)]


def test_conflict_rate_one_uses_hot_key():
    ops = _draw(small(workload={"conflict_rate": 1.0}), 500)
    assert {k for _, _, k in ops} == {HOT_KEY}


def test_conflict_rate_zero_private_keys():
    ops = _draw(small(workload={"conflict_rate": 0.0, "key_space": 4}), 2000)
    owners = {}
    for client, _, key in ops:
        assert owners.setdefault(key, client) == client


def test_conflict_rate_quarter():
    ops = _draw(small(workload={"conflict_rate": 0.25}), 10_000, seed=42)
    frac = sum(k == HOT_KEY for _, _, k in ops) / len(ops)
    assert abs(frac - 0.25) <= 0.02


def test_write_ratio_zero_sends_no_write_traffic():
    out = run_scenario(small(workload={"write_ratio": 0.0, "conflict_rate": 0.5}))
    sent = out.result.telemetry.sent
    for kind in ("write", "ack-write", "commit-write", "ack-commit", "update-view"):
        assert sent[kind] == 0
    assert sent["read"] > 0


def test_closed_loop_is_sequential_per_client():
    out = run_scenario(small())
    by_client = {}
    for e in out.history:
        by_client.setdefault(e.client, []).append(e)
    for ops in by_client.values():
        for a, b in zip(ops, ops[1:]):
            assert a.response == b.invoke


# records and stats


def test_csv_roundtrip_and_determinism(tmp_path):
    scn = small(faults=[{"node": 2, "at_ms": 700}])
    a, b = run_scenario(scn), run_scenario(scn)
    ca = write_csv(to_records(a.history, a.latency.region))
    cb = write_csv(to_records(b.history, b.latency.region))
    assert ca == cb
    assert ca.splitlines()[0].split(",")[:12] == [
        "op_id", "key", "client", "node", "kind", "invoke_ms", "response_ms", "latency_ms",
        "phases", "tag_ts", "tag_id", "value_digest"]
    path = tmp_path / "h.csv"
    path.write_text(ca)
    recs = read_csv(path)
    assert write_csv(recs) == ca
    assert any(r.response_ms is None for r in recs)  # the crashed node's client left a pending op
    pending_line = next(line for line in ca.splitlines()[1:] if ",," in line)
    assert pending_line
    for r in recs:
        if r.latency_ms is not None:
            assert r.latency_ms == pytest.approx(r.response_ms - r.invoke_ms, abs=0.05)
            assert r.phases in (0, 1, 2)
    assert all(v.ok for v in check_all(to_history(recs)).values())


def test_read_csv_rejects_garbage(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(CsvFormatError, match="missing columns"):
        read_csv(p)
    p.write_text(",".join(FIELDS) + "\n1,k,1,1,scan,0,1,1,1,1,1,x,CA\n")
    with pytest.raises(CsvFormatError, match="line 2"):
        read_csv(p)
    p.write_text(",".join(FIELDS) + "\nnope,k,1,1,read,0,1,1,1,1,1,x,CA\n")
    with pytest.raises(CsvFormatError):
        read_csv(p)


def test_stats_empty():
    assert st.summarize([]) == {}
    assert st.cdf_tables([]) == {}
    assert "no completed" in st.format_summary({})
    assert st.trim([], 1, 1) == []


def test_stats_percentiles_and_cdf():
    out = run_scenario(small(workload={"write_ratio": 0.2, "conflict_rate": 0.0}))
    recs = to_records(out.history, out.latency.region)
    summary = st.summarize(recs)
    assert set(summary["read"]) == {"CA", "VA", "IR", "all"}
    row = summary["read"]["all"]
    assert row["p50"] <= row["p90"] <= row["p99"] <= row["p99.9"]
    points = st.cdf_tables(recs)["read"]["all"]
    assert points[-1][1] == 1.0
    assert all(a[0] < b[0] and a[1] <= b[1] for a, b in zip(points, points[1:]))


def test_trim_drops_edges():
    out = run_scenario(small())
    recs = to_records(out.history)
    kept = st.trim(recs, 500, 500)
    assert 0 < len(kept) < len(recs)
    end = max(r.response_ms for r in recs)
    assert all(r.invoke_ms >= 500 and r.response_ms <= end - 500 for r in kept)


def test_tag_along_gives_sub_ms_reads():
    # without jitter the closed loop runs in lockstep and followers always
    # join a read at its start; a little jitter breaks that up
    scn = Scenario(n=3, clients_per_node=8, duration_ms=5000, warmup_ms=0, cooldown_ms=0,
                   workload={"write_ratio": 0.1, "conflict_rate": 0.9},
                   toggles={"tag_along": True, "jitter_ms": 5})
    recs = to_records(run_scenario(scn, check=False).history)
    reads = [r for r in recs if r.kind == "read" and r.latency_ms is not None]
    below = [r for r in reads if r.latency_ms < 1.0]
    assert below and all(r.phases == 0 for r in below)
