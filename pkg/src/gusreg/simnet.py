"""Deterministic discrete-event network for protocol nodes.

Time is an integer count of 0.1 ms ticks. Events pop in (tick, sequence)
order, so a run is a pure function of its inputs and seed. The simulator owns
message delivery, crashes, scripted adversarial scheduling and the history of
client operations.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, Protocol, Sequence

from .core import Key
from .history import TICKS_PER_MS, HistoryEvent
from .messages import Message
from .node import READ, WRITE, ClientOp, Completion, Effects, ProtocolNode

LOCAL_TICKS = 1  # self-delivery, half of the 0.2 ms loopback RTT

TABLE3_REGIONS = ("CA", "VA", "IR", "OR", "JP")
TABLE3_RTT_MS = (
    (0.2, 72, 151, 59, 113),
    (72, 0.2, 88, 93, 162),
    (151, 88, 0.2, 145, 220),
    (59, 93, 145, 0.2, 121),
    (113, 162, 220, 121, 0.2),
)


def ms_to_ticks(ms: float) -> int:
    return int(round(ms * TICKS_PER_MS))


class ConfigError(ValueError):
    pass


class ScriptError(RuntimeError):
    """A scripted directive never matched any message."""


@dataclass(frozen=True)
class LatencyModel:
    """One-way delays in ticks; ``one_way[i][j]`` is node i+1 → node j+1."""

    one_way: tuple[tuple[int, ...], ...]
    regions: tuple[str, ...]
    jitter: int = 0  # extra delay drawn uniformly from [0, jitter] ticks

    def __post_init__(self) -> None:
        n = len(self.one_way)
        if n == 0 or any(len(row) != n for row in self.one_way):
            raise ConfigError("latency matrix must be square and non-empty")
        if any(d <= 0 for row in self.one_way for d in row):
            raise ConfigError("latency matrix entries must be positive")
        if len(self.regions) != n:
            raise ConfigError(f"{len(self.regions)} region names for {n} nodes")
        if self.jitter < 0:
            raise ConfigError("jitter must be non-negative")

    @property
    def n(self) -> int:
        return len(self.one_way)

    def region(self, node: int) -> str:
        return self.regions[node - 1]

    def base(self, src: int, dst: int) -> int:
        return self.one_way[src - 1][dst - 1]

    @classmethod
    def from_rtt(cls, rtt_ms: Sequence[Sequence[float]], regions: Sequence[str] | None = None,
                 jitter_ms: float = 0) -> "LatencyModel":
        n = len(rtt_ms)
        if any(len(row) != n for row in rtt_ms):
            raise ConfigError("latency matrix must be square")
        one_way = []
        for i, row in enumerate(rtt_ms):
            if any(v <= 0 for v in row):
                raise ConfigError("latency matrix entries must be positive")
            one_way.append(tuple(
                LOCAL_TICKS if i == j else max(1, ms_to_ticks(v / 2)) for j, v in enumerate(row)
            ))
        names = tuple(regions) if regions is not None else tuple(f"n{i}" for i in range(1, n + 1))
        return cls(tuple(one_way), names, ms_to_ticks(jitter_ms))

    @classmethod
    def table3(cls, n: int = 3, jitter_ms: float = 0) -> "LatencyModel":
        if not 1 <= n <= len(TABLE3_REGIONS):
            raise ConfigError(f"table3 covers at most {len(TABLE3_REGIONS)} nodes, got {n}")
        rows = [row[:n] for row in TABLE3_RTT_MS[:n]]
        return cls.from_rtt(rows, TABLE3_REGIONS[:n], jitter_ms)

    @classmethod
    def uniform(cls, rtt_ms: float, n: int, jitter_ms: float = 0) -> "LatencyModel":
        if rtt_ms <= 0:
            raise ConfigError("rtt must be positive")
        rows = [[rtt_ms] * n for _ in range(n)]
        return cls.from_rtt(rows, None, jitter_ms)


def latency_profile(profile: str | Sequence[Sequence[float]], n: int, jitter_ms: float = 0,
                    regions: Sequence[str] | None = None) -> LatencyModel:
    """Build a latency model from ``"table3"``, ``"uniform"``/``"uniform:<rtt>"`` or an RTT matrix."""
    if isinstance(profile, str):
        if profile == "table3":
            return LatencyModel.table3(n, jitter_ms)
        if profile.startswith("uniform"):
            _, _, rtt = profile.partition(":")
            return LatencyModel.uniform(float(rtt or 10), n, jitter_ms)
        raise ConfigError(f"unknown latency profile {profile!r}")
    model = LatencyModel.from_rtt(profile, regions, jitter_ms)
    if model.n != n:
        raise ConfigError(f"latency matrix is {model.n}x{model.n} but n = {n}")
    return model


def message_delay(model: LatencyModel, sender: int, recipient: int, rng: random.Random) -> int:
    base = model.base(sender, recipient)
    if model.jitter:
        base += rng.randint(0, model.jitter)
    return base


@dataclass(frozen=True)
class Crash:
    node: int
    at_ms: Optional[float] = None
    after_op: Optional[str] = None  # crash right after the labelled op completes

    def __post_init__(self) -> None:
        if (self.at_ms is None) == (self.after_op is None):
            raise ConfigError("a crash needs exactly one of at_ms / after_op")


@dataclass(frozen=True)
class FaultPlan:
    crashes: tuple[Crash, ...] = ()

    def validate(self, n: int, f: int) -> None:
        nodes = [c.node for c in self.crashes]
        if len(set(nodes)) != len(nodes):
            raise ConfigError("a node may crash at most once")
        if len(nodes) > f:
            raise ConfigError(f"fault plan crashes {len(nodes)} nodes but f = {f}")
        for node in nodes:
            if not 1 <= node <= n:
                raise ConfigError(f"crash of unknown node {node}")


ACTIONS = ("drop", "deliver_at", "delay", "hold_until")


@dataclass
class ScriptDirective:
    """Override for messages matching (src, dst, kind, key); ``None`` matches anything.

    ``occurrence`` picks the k-th matching message (1-based); without it every
    match is affected.
    """

    action: str
    src: Optional[int] = None
    dst: Optional[int] = None
    kind: Optional[str] = None
    key: Optional[Key] = None
    occurrence: Optional[int] = None
    at_ms: Optional[float] = None
    delay_ms: Optional[float] = None
    until: Optional[str] = None
    seen: int = field(default=0, compare=False)
    applied: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if self.action not in ACTIONS:
            raise ConfigError(f"unknown script action {self.action!r}")
        needed = {"deliver_at": self.at_ms, "delay": self.delay_ms, "hold_until": self.until}
        if self.action in needed and needed[self.action] is None:
            raise ConfigError(f"{self.action} directive is missing its argument")

    def matches(self, src: int, dst: int, msg: Message) -> bool:
        if self.src is not None and self.src != src:
            return False
        if self.dst is not None and self.dst != dst:
            return False
        if self.kind is not None and self.kind != msg.kind:
            return False
        if self.key is not None and self.key != msg.key:
            return False
        self.seen += 1
        return self.occurrence is None or self.occurrence == self.seen

    def describe(self) -> str:
        parts = [self.action]
        for name in ("src", "dst", "kind", "key", "occurrence", "at_ms", "delay_ms", "until"):
            v = getattr(self, name)
            if v is not None:
                parts.append(f"{name}={v}")
        return " ".join(parts)


def apply_script(directives: Sequence[ScriptDirective], src: int, dst: int,
                 msg: Message) -> Optional[ScriptDirective]:
    """First directive claiming this message, after advancing every matcher's count."""
    chosen = None
    for d in directives:
        if d.matches(src, dst, msg) and chosen is None:
            chosen = d
    if chosen is not None:
        chosen.applied += 1
    return chosen


@dataclass(frozen=True)
class Invocation:
    client: int
    node: int
    key: Key
    kind: str
    value: Any = None
    at_ms: float = 0.0
    after: Optional[str] = None  # invoke when this labelled op completes
    label: str = ""


class Workload(Protocol):
    def start(self) -> Iterable[Invocation]: ...

    def on_complete(self, event: HistoryEvent, now_ms: float) -> Iterable[Invocation]: ...


class StaticWorkload:
    """A fixed list of invocations, no closed loop."""

    def __init__(self, invocations: Iterable[Invocation]):
        self.invocations = list(invocations)

    def start(self) -> Iterable[Invocation]:
        return self.invocations

    def on_complete(self, event: HistoryEvent, now_ms: float) -> Iterable[Invocation]:
        return ()


@dataclass
class Telemetry:
    sent: Counter = field(default_factory=Counter)
    delivered: int = 0
    dropped_script: int = 0
    dropped_crash: int = 0
    held_undelivered: int = 0
    in_flight: int = 0  # still queued when a horizon cut the run short
    trace_hash: str = ""
    blocked: list[int] = field(default_factory=list)
    crashed: list[int] = field(default_factory=list)
    end_ms: float = 0.0

    @property
    def total_sent(self) -> int:
        return sum(self.sent.values())

    @property
    def conserved(self) -> bool:
        accounted = (self.delivered + self.dropped_script + self.dropped_crash
                     + self.held_undelivered + self.in_flight)
        return accounted == self.total_sent

    def as_dict(self) -> dict:
        return {
            "messages_sent": dict(sorted(self.sent.items())),
            "total_sent": self.total_sent,
            "delivered": self.delivered,
            "dropped_script": self.dropped_script,
            "dropped_crash": self.dropped_crash,
            "held_undelivered": self.held_undelivered,
            "in_flight": self.in_flight,
            "trace_hash": self.trace_hash,
            "blocked_ops": list(self.blocked),
            "crashed": list(self.crashed),
            "end_ms": self.end_ms,
        }


@dataclass
class SimResult:
    history: list[HistoryEvent]
    telemetry: Telemetry

    @property
    def live(self) -> bool:
        return not self.telemetry.blocked


_DELIVER, _INVOKE, _CRASH = 0, 1, 2


class Simulator:
    def __init__(
        self,
        nodes: Sequence[ProtocolNode],
        latency: LatencyModel,
        *,
        seed: int = 0,
        fifo: bool = False,
        faults: FaultPlan | None = None,
        script: Sequence[ScriptDirective] = (),
        horizon_ms: Optional[float] = None,
        snapshots: bool = True,
        check_faults: bool = True,
    ):
        if latency.n != len(nodes):
            raise ConfigError(f"latency model has {latency.n} nodes, protocol has {len(nodes)}")
        self.nodes = {node.id: node for node in nodes}
        self.latency = latency
        self.rng = random.Random(seed)
        self.fifo = fifo
        self.faults = faults or FaultPlan()
        if check_faults:
            cfg = nodes[0].config
            self.faults.validate(cfg.n, cfg.f)
        self.script = [replace(d, seen=0, applied=0) for d in script]
        self.horizon = None if horizon_ms is None else ms_to_ticks(horizon_ms)
        self.snapshots = snapshots
        self.now = 0
        self.crashed: set[int] = set()
        self.telemetry = Telemetry()
        self.history: dict[int, HistoryEvent] = {}
        self._ops: dict[int, ClientOp] = {}
        self._heap: list[tuple] = []
        self._seq = 0
        self._next_op = 0
        self._last_arrival: dict[tuple[int, int], int] = {}
        self._held: dict[str, list[tuple[int, int, Message]]] = {}
        self._waiting: dict[str, list[Invocation]] = {}
        self._crash_after: dict[str, list[int]] = {}
        self._labels: dict[str, HistoryEvent] = {}
        self._trace = hashlib.sha256()
        self._workload: Optional[Workload] = None

    # scheduling

    def _push(self, tick: int, etype: int, payload: Any) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (tick, self._seq, etype, payload))

    def schedule(self, inv: Invocation) -> None:
        if inv.after is not None:
            done = self._labels.get(inv.after)
            if done is None or done.pending:
                self._waiting.setdefault(inv.after, []).append(inv)
                return
            tick = max(self.now, done.response) + ms_to_ticks(inv.at_ms)
        else:
            tick = max(self.now, ms_to_ticks(inv.at_ms))
        self._push(tick, _INVOKE, inv)

    def _send(self, src: int, dst: int, msg: Message) -> None:
        self.telemetry.sent[msg.kind] += 1
        directive = apply_script(self.script, src, dst, msg) if self.script else None
        delay = message_delay(self.latency, src, dst, self.rng)
        if directive is not None:
            action = directive.action
            if action == "drop":
                self.telemetry.dropped_script += 1
                return
            if action == "hold_until":
                done = self._labels.get(directive.until)
                if done is None or done.pending:
                    self._held.setdefault(directive.until, []).append((src, dst, msg))
                    return
            elif action == "deliver_at":
                self._push(max(self.now, ms_to_ticks(directive.at_ms)), _DELIVER, (src, dst, msg))
                return
            elif action == "delay":
                delay += ms_to_ticks(directive.delay_ms)
        tick = self.now + delay
        if self.fifo:
            tick = max(tick, self._last_arrival.get((src, dst), 0))
            self._last_arrival[(src, dst)] = tick
        self._push(tick, _DELIVER, (src, dst, msg))

    def _apply(self, node_id: int, fx: Effects) -> None:
        for dst, msg in fx.sends:
            self._send(node_id, dst, msg)
        for done in fx.completions:
            self._complete(node_id, done)

    # event handlers

    def _invoke(self, inv: Invocation) -> None:
        if inv.node in self.crashed:
            return  # the client died with its node
        self._next_op += 1
        op_id = self._next_op
        value = inv.value
        if inv.kind == WRITE and value is None:
            value = f"v{op_id}"
        op = ClientOp(op_id, inv.client, inv.key, inv.kind, value if inv.kind == WRITE else None)
        event = HistoryEvent(op_id, inv.client, inv.node, inv.key, inv.kind,
                             value=op.value, invoke=self.now, label=inv.label)
        self.history[op_id] = event
        self._ops[op_id] = op
        if inv.label:
            self._labels[inv.label] = event
        self._trace.update(f"I{self.now},{op_id},{inv.node},{inv.kind},{inv.key!r}\n".encode())
        node = self.nodes[inv.node]
        fx = node.effects()
        node.invoke(op, fx)
        self._apply(inv.node, fx)

    def _complete(self, node_id: int, done: Completion) -> None:
        event = self.history[done.op_id]
        event.response = self.now
        event.phases = done.phases
        event.tag = done.tag
        if event.kind == READ:
            event.result = done.value
            if self.snapshots:
                event.stored_at = sum(
                    1 for node in self.nodes.values() if node.stores(event.key, done.value)
                )
        self._trace.update(f"C{self.now},{done.op_id},{done.value!r},{done.tag},{done.phases}\n".encode())
        label = event.label
        if label:
            for src, dst, msg in self._held.pop(label, ()):
                self._push(self.now + message_delay(self.latency, src, dst, self.rng), _DELIVER, (src, dst, msg))
            for inv in self._waiting.pop(label, ()):
                self.schedule(inv)
            for node in self._crash_after.pop(label, ()):
                self._push(self.now, _CRASH, node)
        if self._workload is not None:
            for inv in self._workload.on_complete(event, self.now / TICKS_PER_MS):
                self.schedule(inv)

    def _deliver(self, src: int, dst: int, msg: Message) -> None:
        if dst in self.crashed:
            self.telemetry.dropped_crash += 1
            return
        self.telemetry.delivered += 1
        self._trace.update(f"D{self.now},{src},{dst},{msg!r}\n".encode())
        node = self.nodes[dst]
        fx = node.effects()
        node.receive(src, msg, fx)
        self._apply(dst, fx)

    def run(self, workload: Workload | None = None) -> SimResult:
        self._workload = workload
        for crash in self.faults.crashes:
            if crash.at_ms is not None:
                self._push(ms_to_ticks(crash.at_ms), _CRASH, crash.node)
            else:
                self._crash_after.setdefault(crash.after_op, []).append(crash.node)
        if workload is not None:
            for inv in workload.start():
                self.schedule(inv)
        heap = self._heap
        while heap:
            if self.horizon is not None and heap[0][0] > self.horizon:
                break
            tick, _, etype, payload = heapq.heappop(heap)
            self.now = tick
            if etype == _DELIVER:
                self._deliver(*payload)
            elif etype == _INVOKE:
                self._invoke(payload)
            else:
                if payload not in self.crashed:
                    self.crashed.add(payload)
                    self._trace.update(f"X{tick},{payload}\n".encode())
        return self._finish()

    def _finish(self) -> SimResult:
        tel = self.telemetry
        tel.in_flight = sum(1 for e in self._heap if e[2] == _DELIVER)
        tel.held_undelivered = sum(len(v) for v in self._held.values())
        tel.trace_hash = self._trace.hexdigest()
        tel.crashed = sorted(self.crashed)
        tel.end_ms = self.now / TICKS_PER_MS
        history = [self.history[k] for k in sorted(self.history)]
        if self.horizon is None:
            tel.blocked = [e.op_id for e in history if e.pending and e.node not in self.crashed]
        unmatched = [d for d in self.script if d.applied == 0]
        if unmatched:
            raise ScriptError(
                "script directives never matched: " + "; ".join(d.describe() for d in unmatched)
            )
        return SimResult(history, tel)
