"""Scripted adversarial executions against the 1-RTT strawman, and the Gus counterpart.

Node roles for n = 2f+1 with f ≥ 3: reader ``a`` = 1, its helpers ``B`` =
2..f, the quorum-intersection node ``d`` = f+1, writer ``e`` = f+2, and the
writer's helpers ``F`` = f+3..n. For n = 7 that is a..g = 1..7.

* e1: w1 completes at {d, e} ∪ F; everything those nodes send to the rest is
  held back, except between d and a. r1 at a reads from {a, d} ∪ B.
* e2: the writer crashes right after sending, only d ever sees w1, and r1
  cannot tell the difference from e1.
* e3: e2, then a and d crash once r1 returns, and r2 at b reads from B ∪ F,
  where nobody has heard of w1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..baselines import fastonly_config
from ..core import QuorumConfig, default_quorums
from ..history import HistoryEvent
from ..lincheck import Verdict, check
from ..protocols import make_nodes
from ..simnet import Crash, FaultPlan, Invocation, LatencyModel, ScriptDirective, Simulator, StaticWorkload

KEY = "x"
VALUE = "x"
RTT_MS = 10.0


@dataclass
class Roles:
    n: int
    f: int
    a: int
    b: list[int]
    d: int
    e: int
    w: list[int]  # F: writer-side helpers

    @classmethod
    def for_n(cls, n: int) -> "Roles":
        if n % 2 == 0 or n < 7:
            raise ValueError(f"the construction needs n = 2f+1 with f ≥ 3, got n = {n}")
        f = (n - 1) // 2
        return cls(n, f, 1, list(range(2, f + 1)), f + 1, f + 2, list(range(f + 3, n + 1)))


@dataclass
class Execution:
    name: str
    protocol: str
    n: int
    history: list[HistoryEvent]
    verdict: Verdict
    expect_linearizable: bool
    notes: list[str] = field(default_factory=list)
    live: bool = True

    @property
    def as_expected(self) -> bool:
        return self.live and self.verdict.ok == self.expect_linearizable

    def op(self, label: str) -> HistoryEvent | None:
        return next((e for e in self.history if e.label == label), None)

    def report(self) -> str:
        lines = [f"== {self.name} ({self.protocol}, n={self.n}) =="]
        lines += [f"  {e}" for e in self.history]
        lines += [f"  {note}" for note in self.notes]
        lines.append("  " + self.verdict.explain().replace("\n", "\n  "))
        if not self.live:
            lines.append("  LIVENESS FAILURE: operations still blocked")
        status = "as predicted" if self.as_expected else "UNEXPECTED"
        lines.append(f"  outcome: {status}")
        return "\n".join(lines)


def _run(name: str, protocol: str, cfg: QuorumConfig, invocations, script, crashes,
         expect_ok: bool) -> Execution:
    sim = Simulator(
        make_nodes(protocol, cfg),
        LatencyModel.uniform(RTT_MS, cfg.n),
        fifo=True,
        faults=FaultPlan(tuple(crashes)),
        script=script,
    )
    result = sim.run(StaticWorkload(invocations))
    verdict = check(result.history, KEY)
    ex = Execution(name, protocol, cfg.n, result.history, verdict, expect_ok, live=result.live)
    for label in ("r1", "r2"):
        e = ex.op(label)
        if e is not None and not e.pending:
            shown = "default" if e.result is None else repr(e.result)
            ex.notes.append(f"{label} returned {shown}")
    return ex


def _fastonly(which: str, n: int) -> Execution:
    r = Roles.for_n(n)
    cfg = fastonly_config(n, r.f)
    others = [r.a, *r.b]  # nodes outside the write quorum
    w1 = Invocation(r.e, r.e, KEY, "write", VALUE, at_ms=0, label="w1")
    r1 = Invocation(r.a, r.a, KEY, "read", at_ms=RTT_MS + 1, label="r1")
    script: list[ScriptDirective] = []
    crashes: list[Crash] = []
    invocations = [w1, r1]
    if which == "e1":
        for dst in others:
            script.append(ScriptDirective("hold_until", src=r.e, dst=dst, kind="fo-write", until="r1"))
        for src in [r.e, *r.w]:
            script.append(ScriptDirective("hold_until", src=src, dst=r.a, kind="fo-read-reply", until="r1"))
    else:
        for dst in [*others, *r.w]:
            script.append(ScriptDirective("drop", src=r.e, dst=dst, kind="fo-write"))
        for src in r.w:
            script.append(ScriptDirective("hold_until", src=src, dst=r.a, kind="fo-read-reply", until="r1"))
        crashes.append(Crash(r.e, at_ms=1))
        if which == "e3":
            crashes += [Crash(r.a, after_op="r1"), Crash(r.d, after_op="r1")]
            invocations.append(Invocation(r.b[0], r.b[0], KEY, "read", at_ms=1, after="r1", label="r2"))
    return _run(which, "fastonly", cfg, invocations, script, crashes, expect_ok=which != "e3")


def gus_companion(n: int = 5) -> Execution:
    """The same attack shape against Gus with majority quorums.

    The writer at e crashes right after sending w1, its write to a and the
    remaining helpers arrives late, and only f nodes may crash, so after r1
    only d can be taken down as well. Gus must stay linearizable and live.
    """
    if n not in (3, 4, 5):
        raise ValueError("the Gus companion runs with n ∈ {3, 4, 5}")
    cfg = default_quorums(n)
    a, b, d, e = 1, 2, n - 1, n
    late = 20 * RTT_MS
    script = [
        ScriptDirective("deliver_at", src=e, dst=dst, kind="write", at_ms=late)
        for dst in range(1, n + 1) if dst not in (d, e)
    ]
    # r1's quorum must contain d, the one node that saw w1 in time
    script += [
        ScriptDirective("hold_until", src=src, dst=a, kind="ack-read", until="r1")
        for src in range(1, n + 1) if src not in (a, b, d, e)
    ]
    crashes = [Crash(e, at_ms=1)]
    if cfg.f >= 2:
        crashes.append(Crash(d, after_op="r1"))
    invocations = [
        Invocation(e, e, KEY, "write", VALUE, at_ms=0, label="w1"),
        Invocation(a, a, KEY, "read", at_ms=RTT_MS + 1, label="r1"),
        Invocation(b, b, KEY, "read", at_ms=1, after="r1", label="r2"),
    ]
    return _run("gus-companion", "gus", cfg, invocations, script, crashes, expect_ok=True)


def run_impossible(which: str = "all", n: int = 7, gus: bool = False, gus_n: int = 5) -> list[Execution]:
    if gus:
        return [gus_companion(gus_n)]
    names = ("e1", "e2", "e3") if which == "all" else (which,)
    for name in names:
        if name not in ("e1", "e2", "e3"):
            raise ValueError(f"unknown execution {name!r}")
    return [_fastonly(name, n) for name in names]
