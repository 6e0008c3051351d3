"""Safety invariants checked on recorded histories.

Each function returns a list of counterexample descriptions; empty means the
property held. They rely on the tag and storage snapshot the simulator
records on every completed op.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import INITIAL_TAG
from .history import HistoryEvent


def _by_key(history: Iterable[HistoryEvent]) -> dict:
    out: dict = {}
    for e in history:
        if e.response is not None:
            out.setdefault(e.key, []).append(e)
    return out


def unique_write_tags(history: Iterable[HistoryEvent]) -> list[str]:
    """Distinct completed writes on a key never share a tag."""
    problems = []
    for key, ops in _by_key(history).items():
        owner: dict = {}
        for e in ops:
            if e.kind != "write":
                continue
            if e.tag == INITIAL_TAG:
                problems.append(f"key {key!r}: op {e.op_id} wrote under the initial tag")
            other = owner.setdefault(e.tag, e)
            if other is not e:
                problems.append(f"key {key!r}: ops {other.op_id} and {e.op_id} share tag {e.tag}")
    return problems


def progress_of_tag(history: Iterable[HistoryEvent]) -> list[str]:
    """If a finishes before b starts, b's tag ≥ a's tag, strictly when b writes."""
    problems = []
    for key, ops in _by_key(history).items():
        done = sorted(ops, key=lambda e: e.response)
        started = sorted(ops, key=lambda e: e.invoke)
        best = None  # op with the largest tag among those already finished
        i = 0
        for b in started:
            while i < len(done) and done[i].response < b.invoke:
                if best is None or done[i].tag > best.tag:
                    best = done[i]
                i += 1
            if best is None:
                continue
            if b.tag < best.tag or (b.kind == "write" and b.tag == best.tag):
                problems.append(
                    f"key {key!r}: op {b.op_id} ({b.kind}, tag {b.tag}) follows op "
                    f"{best.op_id} (tag {best.tag})"
                )
    return problems


def committed_write(history: Iterable[HistoryEvent], q_write: int) -> list[str]:
    """Every read returns a value held by at least q_write nodes when it responds."""
    problems = []
    for e in history:
        if e.kind == "read" and e.response is not None and e.stored_at is not None:
            if e.stored_at < q_write:
                problems.append(
                    f"op {e.op_id} returned {e.result!r} stored at only {e.stored_at} nodes"
                )
    return problems


def single_association(history: Iterable[HistoryEvent]) -> list[str]:
    """Each write is seen under one tag: reads agree with each other and with the writer."""
    problems = []
    for key, ops in _by_key(history).items():
        seen: dict = {None: {INITIAL_TAG}}
        for e in ops:
            if e.kind == "write":
                seen.setdefault(e.value, set()).add(e.tag)
        for e in ops:
            if e.kind == "read":
                seen.setdefault(e.result, set()).add(e.tag)
        for value, tags in seen.items():
            if len(tags) > 1:
                shown = ", ".join(str(t) for t in sorted(tags))
                problems.append(f"key {key!r}: value {value!r} observed under tags {shown}")
    return problems


def check_lemmas(history: Sequence[HistoryEvent], q_write: int) -> dict[str, list[str]]:
    return {
        "unique_write_tag": unique_write_tags(history),
        "progress_of_tag": progress_of_tag(history),
        "committed_write": committed_write(history, q_write),
        "single_association": single_association(history),
    }
