"""Operation records produced by a run and consumed by the checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .core import Key, Tag

TICKS_PER_MS = 10  # simulated time is fixed-point, 0.1 ms per tick


@dataclass
class HistoryEvent:
    op_id: int
    client: int
    node: int
    key: Key
    kind: str
    value: Any = None  # argument of a write
    result: Any = None  # value returned by a read
    invoke: int = 0  # ticks
    response: Optional[int] = None
    phases: Optional[int] = None
    tag: Optional[Tag] = None
    label: str = ""
    stored_at: Optional[int] = None  # nodes holding the read value at response

    @property
    def pending(self) -> bool:
        return self.response is None

    @property
    def invoke_ms(self) -> float:
        return self.invoke / TICKS_PER_MS

    @property
    def response_ms(self) -> Optional[float]:
        return None if self.response is None else self.response / TICKS_PER_MS

    @property
    def latency_ms(self) -> Optional[float]:
        if self.response is None:
            return None
        return (self.response - self.invoke) / TICKS_PER_MS

    def __str__(self) -> str:
        name = self.label or f"op{self.op_id}"
        if self.kind == "write":
            body = f"{name}: write({self.value!r})"
        else:
            body = f"{name}: read() -> {'default' if self.result is None else repr(self.result)}"
        end = "pending" if self.response is None else f"{self.response_ms:g}ms"
        return f"{body} @ node {self.node} [{self.invoke_ms:g}ms, {end}]"
