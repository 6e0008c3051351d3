import random

import pytest

from gusreg.history import HistoryEvent
from gusreg.lincheck import MalformedHistory, all_linearizable, check, check_all
from gusreg.harness.impossible import run_impossible

from oracles import brute_force_linearizable, random_history


def ev(op_id, client, kind, inv, resp, value=None, result=None, key="k"):
    return HistoryEvent(op_id, client, client, key, kind, value=value, result=result,
                        invoke=inv, response=resp)


def test_write_then_read():
    h = [ev(1, 1, "write", 0, 5, value="x"), ev(2, 2, "read", 6, 9, result="x")]
    v = check(h, "k")
    assert v.ok and [e.op_id for e in v.order] == [1, 2]


def test_stale_default_read_rejected():
    h = [ev(1, 1, "write", 0, 5, value="x"), ev(2, 2, "read", 6, 9, result=None)]
    v = check(h, "k")
    assert not v.ok
    assert [e.op_id for e in v.prefix] == [1, 2]
    assert "NOT linearizable" in v.explain()


def test_overlapping_read_may_see_either():
    for result in ("x", None):
        h = [ev(1, 1, "write", 0, 10, value="x"), ev(2, 2, "read", 2, 8, result=result)]
        assert check(h, "k").ok


def test_pending_write_may_or_may_not_apply():
    w = ev(1, 1, "write", 0, None, value="x")
    assert check([w, ev(2, 2, "read", 5, 6, result="x")], "k").ok
    assert check([w, ev(2, 2, "read", 5, 6, result=None)], "k").ok
    # once seen it cannot vanish again
    h = [w, ev(2, 2, "read", 5, 6, result="x"), ev(3, 3, "read", 7, 8, result=None)]
    assert not check(h, "k").ok


def test_value_nobody_wrote():
    v = check([ev(1, 1, "read", 0, 1, result="ghost")], "k")
    assert not v.ok and "nobody wrote" in v.reason


def test_sequentially_consistent_but_not_linearizable():
    # client 2 reads the new value, then client 3 (strictly later) reads the old one
    h = [ev(1, 1, "write", 0, 100, value="x"),
         ev(2, 2, "read", 10, 20, result="x"),
         ev(3, 3, "read", 30, 40, result=None)]
    assert not check(h, "k").ok


def test_malformed_histories():
    with pytest.raises(MalformedHistory):
        check([ev(1, 1, "read", 5, 3)], "k")
    with pytest.raises(MalformedHistory):
        check([ev(1, 1, "read", 0, 3), ev(1, 2, "read", 0, 3)], "k")
    with pytest.raises(MalformedHistory):
        check([ev(1, 1, "read", 0, 10), ev(2, 1, "read", 5, 12)], "k")
    with pytest.raises(MalformedHistory):
        check([ev(1, 1, "cas", 0, 1)], "k")


def test_matches_brute_force_sample():
    rng = random.Random(2024)
    for _ in range(1500):
        h = random_history(rng)
        assert check(h, "k").ok == brute_force_linearizable(h), [str(e) for e in h]


def _sequential(rng, n_ops, clients=3):
    t, value, out = 0, None, []
    written = []
    for op_id in range(1, n_ops + 1):
        c = rng.randint(1, clients)
        if rng.random() < 0.4:
            value = f"v{op_id}"
            e = ev(op_id, c, "write", t, t + 2, value=value)
        else:
            e = ev(op_id, c, "read", t, t + 2, result=value)
        out.append(e)
        t += 3
    return out


def test_accepts_sequential_histories():
    rng = random.Random(5)
    for _ in range(50):
        assert check(_sequential(rng, rng.randint(1, 120)), "k").ok


def test_check_all_locality():
    good = [ev(1, 1, "write", 0, 5, value="x", key="a"), ev(2, 2, "read", 6, 9, result="x", key="a")]
    others = [ev(10 + i, 3 + i, "read", 0, 1, result=None, key=f"k{i}") for i in range(9)]
    v = check_all(good + others)
    assert len(v) == 10 and all_linearizable(v)
    bad = good + others + [ev(30, 20, "read", 20, 21, result=None, key="a")]
    v = check_all(bad)
    assert not all_linearizable(v)
    assert [k for k, x in v.items() if not x.ok] == ["a"]


def test_merged_history_locality_vs_brute_force():
    # per-key verdicts on a two-key history agree with brute force over each key
    rng = random.Random(77)
    for _ in range(200):
        h1, h2 = random_history(rng, 4, 2), random_history(rng, 4, 2)
        for e in h2:
            e.key, e.op_id, e.client = "other", e.op_id + 100, e.client + 10
            if e.value is not None:
                e.value = "o" + e.value
            if e.result is not None:
                e.result = "o" + e.result
        verdicts = check_all(h1 + h2)
        want = brute_force_linearizable(h1) and brute_force_linearizable(h2)
        assert all_linearizable(verdicts) == want


def test_impossibility_fixtures():
    e1, e2, e3 = run_impossible("all", 7)
    assert check(e1.history, "x").ok and check(e2.history, "x").ok
    v = check(e3.history, "x")
    assert not v.ok
    assert any(e.label == "r2" and e.result is None for e in v.prefix)


def test_large_history_fast():
    import time
    rng = random.Random(3)
    h = _sequential(rng, 500, clients=8)
    t0 = time.perf_counter()
    assert check(h, "k").ok
    assert time.perf_counter() - t0 < 5
