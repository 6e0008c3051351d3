"""History CSV: one row per operation, completed or pending."""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from ..core import Tag
from ..history import TICKS_PER_MS, HistoryEvent


class CsvFormatError(ValueError):
    pass


def value_digest(value) -> str:
    if value is None:
        return "default"
    return hashlib.sha256(str(value).encode()).hexdigest()[:12]


@dataclass
class OpRecord:
    op_id: int
    key: str
    client: int
    node: int
    kind: str
    invoke_ms: float
    response_ms: Optional[float]
    latency_ms: Optional[float]
    phases: Optional[int]
    tag_ts: Optional[int]
    tag_id: Optional[int]
    value_digest: str
    region: str = ""

    @classmethod
    def from_event(cls, e: HistoryEvent, region: str = "") -> "OpRecord":
        done = e.response is not None
        shown = e.value if e.kind == "write" else e.result
        return cls(
            op_id=e.op_id,
            key=str(e.key),
            client=e.client,
            node=e.node,
            kind=e.kind,
            invoke_ms=e.invoke / TICKS_PER_MS,
            response_ms=e.response / TICKS_PER_MS if done else None,
            latency_ms=(e.response - e.invoke) / TICKS_PER_MS if done else None,
            phases=e.phases if done else None,
            tag_ts=e.tag.ts if done else None,
            tag_id=e.tag.id if done else None,
            value_digest=value_digest(shown) if done or e.kind == "write" else "",
            region=region,
        )


FIELDS = [f.name for f in fields(OpRecord)]
_INTS = {"op_id", "client", "node", "phases", "tag_ts", "tag_id"}
_FLOATS = {"invoke_ms", "response_ms", "latency_ms"}


def _cell(name: str, v) -> str:
    if v is None:
        return ""
    if name in _FLOATS:
        return f"{v:.1f}"
    return str(v)


def to_records(history: Iterable[HistoryEvent], region: Callable[[int], str] | None = None) -> list[OpRecord]:
    return [OpRecord.from_event(e, region(e.node) if region else "") for e in history]


def write_csv(records: Sequence[OpRecord], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_cell(name, getattr(r, name)) for name in FIELDS])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_csv(path: str | Path) -> list[OpRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FIELDS[:-1]) - set(reader.fieldnames or ())
        if missing:
            raise CsvFormatError(f"missing columns: {', '.join(sorted(missing))}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                kw = {}
                for name in FIELDS:
                    raw = row.get(name) or ""
                    if name in _INTS:
                        kw[name] = int(raw) if raw else None
                    elif name in _FLOATS:
                        kw[name] = float(raw) if raw else None
                    else:
                        kw[name] = raw
                if kw["kind"] not in ("read", "write"):
                    raise ValueError(f"unknown kind {kw['kind']!r}")
                out.append(OpRecord(**kw))
            except (TypeError, ValueError) as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from None
    return out


def to_history(records: Iterable[OpRecord]) -> list[HistoryEvent]:
    """Rebuild checker input from a CSV; values are identified by digest."""
    out = []
    for r in records:
        done = r.response_ms is not None
        digest = r.value_digest or None
        value = None if digest == "default" else digest
        e = HistoryEvent(
            r.op_id, r.client, r.node, r.key, r.kind,
            value=value if r.kind == "write" else None,
            result=value if r.kind == "read" and done else None,
            invoke=round(r.invoke_ms * TICKS_PER_MS),
            response=round(r.response_ms * TICKS_PER_MS) if done else None,
            phases=r.phases,
            tag=Tag(r.tag_ts, r.tag_id) if r.tag_ts is not None else None,
        )
        out.append(e)
    return out
