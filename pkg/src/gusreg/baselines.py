"""Reference protocols on the same node framework.

:class:`AbdNode` is multi-writer ABD with the optional read write-back.
:class:`FastOnlyNode` finishes every operation in one round trip with
quorums of size n−f; it is deliberately unsafe for n > 5 and exists to
replay the impossibility executions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import INITIAL_TAG, Key, QuorumConfig, Tag
from .messages import (
    AbdPropagate,
    AbdPropagateAck,
    AbdQuery,
    AbdQueryReply,
    FoRead,
    FoReadReply,
    FoWrite,
    FoWriteAck,
    Message,
)
from .node import READ, ClientOp, Effects, ProtocolNode


@dataclass
class _Register:
    tag: Tag = INITIAL_TAG
    value: Any = None

    def offer(self, tag: Tag, value: Any) -> None:
        if tag > self.tag:
            self.tag, self.value = tag, value


@dataclass
class _Pending:
    op: ClientOp
    replies: dict[int, tuple[Tag, Any]] = field(default_factory=dict)
    acks: set[int] = field(default_factory=set)
    phase: int = 1
    tag: Tag = INITIAL_TAG
    value: Any = None


class AbdNode(ProtocolNode):
    protocol = "abd"

    def __init__(self, node_id: int, config: QuorumConfig):
        super().__init__(node_id, config)
        self.registers: dict[Key, _Register] = {}
        self.pending: dict[int, _Pending] = {}
        self._rid = 0

    def register(self, key: Key) -> _Register:
        reg = self.registers.get(key)
        if reg is None:
            reg = self.registers[key] = _Register()
        return reg

    def stores(self, key: Key, value: Any) -> bool:
        reg = self.registers.get(key)
        return (reg.value if reg else None) == value

    def _begin(self, op: ClientOp, fx: Effects) -> None:
        self._rid += 1
        self.pending[self._rid] = _Pending(op)
        fx.broadcast(AbdQuery(op.key, self._rid))

    start_read = _begin
    start_write = _begin

    def receive(self, src: int, msg: Message, fx: Effects) -> None:
        if isinstance(msg, AbdQuery):
            reg = self.register(msg.key)
            fx.send(src, AbdQueryReply(msg.key, msg.rid, reg.tag, reg.value))
        elif isinstance(msg, AbdPropagate):
            self.register(msg.key).offer(msg.tag, msg.value)
            fx.send(src, AbdPropagateAck(msg.key, msg.rid))
        elif isinstance(msg, AbdQueryReply):
            self._on_reply(src, msg, fx)
        elif isinstance(msg, AbdPropagateAck):
            self._on_propagate_ack(src, msg, fx)

    def _on_reply(self, src: int, msg: AbdQueryReply, fx: Effects) -> None:
        p = self.pending.get(msg.rid)
        if p is None or p.phase != 1 or src in p.replies:
            return
        p.replies[src] = (msg.tag, msg.value)
        if len(p.replies) < self.config.q_read:
            return
        tag, value = max(p.replies.values(), key=lambda r: r[0])
        if p.op.kind == READ:
            if all(t == tag for t, _ in p.replies.values()):
                self._done(msg.rid, value, tag, 1, fx)
                return
            p.tag, p.value = tag, value
        else:
            p.tag, p.value = Tag(tag.ts + 1, self.id), p.op.value
        p.phase = 2
        fx.broadcast(AbdPropagate(msg.key, msg.rid, p.tag, p.value))

    def _on_propagate_ack(self, src: int, msg: AbdPropagateAck, fx: Effects) -> None:
        p = self.pending.get(msg.rid)
        if p is None or p.phase != 2:
            return
        p.acks.add(src)
        if len(p.acks) >= self.config.q_write:
            result = p.value if p.op.kind == READ else None
            self._done(msg.rid, result, p.tag, 2, fx)

    def _done(self, rid: int, value: Any, tag: Tag, phases: int, fx: Effects) -> None:
        p = self.pending.pop(rid)
        fx.complete(p.op, value, tag, phases)
        if p.op.kind != READ:
            self.write_finished(p.op.key, fx)


def fastonly_config(n: int, f: int | None = None) -> QuorumConfig:
    """Quorums of size n−f for both reads and writes, skipping safety checks."""
    if f is None:
        f = (n - 1) // 2
    return QuorumConfig.unchecked(n, f, n - f, n - f)


class FastOnlyNode(ProtocolNode):
    protocol = "fastonly"

    def __init__(self, node_id: int, config: QuorumConfig):
        super().__init__(node_id, config)
        self.registers: dict[Key, _Register] = {}
        self.pending: dict[int, _Pending] = {}
        self._rid = 0

    def register(self, key: Key) -> _Register:
        reg = self.registers.get(key)
        if reg is None:
            reg = self.registers[key] = _Register()
        return reg

    def stores(self, key: Key, value: Any) -> bool:
        reg = self.registers.get(key)
        return (reg.value if reg else None) == value

    def start_write(self, op: ClientOp, fx: Effects) -> None:
        self._rid += 1
        p = self.pending[self._rid] = _Pending(op)
        p.tag = Tag(self.register(op.key).tag.ts + 1, self.id)
        fx.broadcast(FoWrite(op.key, self._rid, p.tag, op.value))

    def start_read(self, op: ClientOp, fx: Effects) -> None:
        self._rid += 1
        self.pending[self._rid] = _Pending(op)
        fx.broadcast(FoRead(op.key, self._rid))

    def receive(self, src: int, msg: Message, fx: Effects) -> None:
        if isinstance(msg, FoWrite):
            self.register(msg.key).offer(msg.tag, msg.value)
            fx.send(src, FoWriteAck(msg.key, msg.rid))
        elif isinstance(msg, FoRead):
            reg = self.register(msg.key)
            fx.send(src, FoReadReply(msg.key, msg.rid, reg.tag, reg.value))
        elif isinstance(msg, FoWriteAck):
            p = self.pending.get(msg.rid)
            if p is None:
                return
            p.acks.add(src)
            if len(p.acks) >= self.config.q_write:
                del self.pending[msg.rid]
                fx.complete(p.op, None, p.tag, 1)
                self.write_finished(p.op.key, fx)
        elif isinstance(msg, FoReadReply):
            p = self.pending.get(msg.rid)
            if p is None or src in p.replies:
                return
            p.replies[src] = (msg.tag, msg.value)
            if len(p.replies) >= self.config.q_read:
                del self.pending[msg.rid]
                tag, value = max(p.replies.values(), key=lambda r: r[0])
                fx.complete(p.op, value, tag, 1)
