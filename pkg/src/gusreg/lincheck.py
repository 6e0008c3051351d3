"""Linearizability checking for read/write register histories.

Each key is checked on its own. The search picks linearization points in
order, memoizing on (set of linearized ops, register value). A pending write
may take effect at any point after its invocation or never; a pending read
constrains nothing and is ignored. The initial register value is ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .core import Key
from .history import HistoryEvent

DEFAULT = None


class MalformedHistory(ValueError):
    pass


@dataclass
class Verdict:
    key: Key
    ok: bool
    order: list[HistoryEvent] = field(default_factory=list)  # witness when ok
    prefix: list[HistoryEvent] = field(default_factory=list)  # smallest failing cut otherwise
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def explain(self) -> str:
        if self.ok:
            lines = [f"key {self.key!r}: linearizable"]
            lines += [f"  {i + 1}. {e}" for i, e in enumerate(self.order)]
        else:
            lines = [f"key {self.key!r}: NOT linearizable ({self.reason})", "  minimal violating prefix:"]
            lines += [f"    {e}" for e in self.prefix]
        return "\n".join(lines)


def _precedes(a: HistoryEvent, b: HistoryEvent) -> bool:
    if a.response is None:
        return False
    return a.response < b.invoke or (a.client == b.client and a.response <= b.invoke)


def _validate(ops: Sequence[HistoryEvent]) -> None:
    seen = set()
    for e in ops:
        if e.op_id in seen:
            raise MalformedHistory(f"duplicate op id {e.op_id}")
        seen.add(e.op_id)
        if e.kind not in ("read", "write"):
            raise MalformedHistory(f"op {e.op_id}: unknown kind {e.kind!r}")
        if e.response is not None and e.response < e.invoke:
            raise MalformedHistory(f"op {e.op_id}: response before invocation")
    last: dict[Any, HistoryEvent] = {}
    for e in sorted(ops, key=lambda e: (e.invoke, e.op_id)):
        prev = last.get(e.client)
        if prev is not None and (prev.response is None or prev.response > e.invoke):
            raise MalformedHistory(f"client {e.client} overlaps ops {prev.op_id} and {e.op_id}")
        last[e.client] = e


def _search(ops: list[HistoryEvent]) -> Optional[list[HistoryEvent]]:
    """Return a linearization of ``ops`` or None. ``ops`` excludes pending reads."""
    ops = sorted(ops, key=lambda e: (e.invoke, e.op_id))
    count = len(ops)
    required = 0
    for i, e in enumerate(ops):
        if e.response is not None:
            required |= 1 << i
    written = {e.value for e in ops if e.kind == "write"}
    for e in ops:
        if e.kind == "read" and e.result is not DEFAULT and e.result not in written:
            return None
    never = float("inf")

    def candidates(mask: int) -> list[int]:
        # unplaced ops that no other unplaced op must precede
        first = second = never
        first_i = -1
        for i in range(count):
            if not mask >> i & 1:
                r = ops[i].response
                if r is not None and r < second:
                    if r < first:
                        first, second, first_i = r, first, i
                    else:
                        second = r
        out = []
        clients = set()
        for i in range(count):
            if mask >> i & 1:
                continue
            x = ops[i]
            if x.invoke > first:
                break
            if x.client not in clients:
                clients.add(x.client)
                if x.invoke <= (second if i == first_i else first):
                    out.append(i)
        return out

    # reads waiting on each value; once all are placed the value is "dead" and
    # any two dead values are interchangeable for the rest of the search
    readers: dict[Any, int] = {}
    for i, e in enumerate(ops):
        if e.kind == "read":
            readers[e.result] = readers.get(e.result, 0) | 1 << i
    dead = object()

    visited: set[tuple[int, Any]] = set()
    path: list[int] = []

    def expand(mask: int, value: Any):
        # place reads of the current value, and unread writes while the
        # current value is dead: neither choice can hurt later steps
        while mask & required != required:
            cands = candidates(mask)
            live = readers.get(value, 0) & ~mask
            pick = None
            for i in cands:
                e = ops[i]
                if e.kind == "read":
                    if e.result == value:
                        pick = i
                        break
                elif not live and not readers.get(e.value, 0) & ~mask:
                    pick = i
                    break
            if pick is None:
                state = (mask, value if live else dead)
                if state in visited:
                    return None
                visited.add(state)
                writes = [i for i in cands if ops[i].kind == "write"]
                return [mask, writes[::-1], len(path)]
            if ops[pick].kind == "write":
                value = ops[pick].value
            mask |= 1 << pick
            path.append(pick)
        return True

    frame = expand(0, DEFAULT)
    if frame is True:
        return [ops[i] for i in path]
    stack = [frame] if frame else []
    while stack:
        mask, todo, base = stack[-1]
        del path[base:]
        if not todo:
            stack.pop()
            continue
        i = todo.pop()
        path.append(i)
        frame = expand(mask | 1 << i, ops[i].value)
        if frame is True:
            return [ops[j] for j in path]
        if frame:
            stack.append(frame)
    return None


def _cut(ops: Sequence[HistoryEvent], t: int) -> list[HistoryEvent]:
    """The history as it looked at time ``t``: later responses become pending."""
    out = []
    for e in ops:
        if e.invoke > t:
            continue
        if e.response is not None and e.response > t:
            if e.kind == "read":
                continue
            e = HistoryEvent(**{**e.__dict__, "response": None})
        out.append(e)
    return out


def check(history: Iterable[HistoryEvent], key: Key | None = None) -> Verdict:
    ops = [e for e in history if key is None or e.key == key]
    _validate(ops)
    if key is None and ops:
        key = ops[0].key
    live = [e for e in ops if not (e.kind == "read" and e.response is None)]
    order = _search(live)
    if order is not None:
        return Verdict(key, True, order=order)
    times = sorted({e.response for e in live if e.response is not None})
    lo, hi = 0, len(times) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _search(_cut(live, times[mid])) is None:
            hi = mid
        else:
            lo = mid + 1
    prefix = sorted(_cut(live, times[lo]), key=lambda e: (e.invoke, e.op_id))
    return Verdict(key, False, prefix=prefix, reason=_reason(prefix))


def _reason(prefix: Sequence[HistoryEvent]) -> str:
    written = {e.value for e in prefix if e.kind == "write"}
    for e in prefix:
        if e.kind == "read" and e.result is not DEFAULT and e.result not in written:
            return f"op {e.op_id} read a value nobody wrote"
    last = max((e for e in prefix if e.response is not None), key=lambda e: e.response, default=None)
    return f"no valid order once op {last.op_id} responds" if last else "no valid order"


def check_all(history: Iterable[HistoryEvent]) -> dict[Key, Verdict]:
    by_key: dict[Key, list[HistoryEvent]] = {}
    for e in history:
        by_key.setdefault(e.key, []).append(e)
    return {k: check(ops, k) for k, ops in sorted(by_key.items(), key=lambda kv: repr(kv[0]))}


def all_linearizable(verdicts: dict[Key, Verdict]) -> bool:
    return all(v.ok for v in verdicts.values())
