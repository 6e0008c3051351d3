"""Plumbing shared by protocol state machines.

A node never talks to the network directly. Each handler receives an
:class:`Effects` collector, records the messages it wants sent and the client
operations it finished, and the simulator applies them afterwards. Handlers
are therefore deterministic functions of (node state, input).
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Any, Sequence

from .core import Key, QuorumConfig, Tag
from .messages import Message

READ = "read"
WRITE = "write"


@dataclass(frozen=True, slots=True)
class ClientOp:
    op_id: int
    client: int
    key: Key
    kind: str
    value: Any = None


@dataclass(frozen=True, slots=True)
class Completion:
    op_id: int
    value: Any
    tag: Tag
    phases: int


class Effects:
    __slots__ = ("peers", "sends", "completions")

    def __init__(self, peers: Sequence[int]):
        self.peers = peers
        self.sends: list[tuple[int, Message]] = []
        self.completions: list[Completion] = []

    def send(self, dst: int, msg: Message) -> None:
        self.sends.append((dst, msg))

    def broadcast(self, msg: Message) -> None:
        for dst in self.peers:
            self.sends.append((dst, msg))

    def complete(self, op: ClientOp, value: Any, tag: Tag, phases: int) -> None:
        self.completions.append(Completion(op.op_id, value, tag, phases))


class ConcurrentWriteError(RuntimeError):
    """A writer was asked to start a second write on a key it is still writing."""


class ProtocolNode:
    """Base class: identity, quorum config and per-key writer serialization.

    Writer ids are node ids, so co-located clients share one writer. Writes
    to the same key from different clients on this node are queued and run
    one at a time; reads go straight through.
    """

    protocol = "base"

    def __init__(self, node_id: int, config: QuorumConfig):
        self.id = node_id
        self.config = config
        self.peers = tuple(range(1, config.n + 1))
        self._write_queue: dict[Key, deque[ClientOp]] = defaultdict(deque)
        self._writing: set[Key] = set()

    def effects(self) -> Effects:
        return Effects(self.peers)

    def invoke(self, op: ClientOp, fx: Effects) -> None:
        if op.kind == READ:
            self.start_read(op, fx)
        elif op.key in self._writing:
            self._write_queue[op.key].append(op)
        else:
            self._writing.add(op.key)
            self.start_write(op, fx)

    def write_finished(self, key: Key, fx: Effects) -> None:
        queue = self._write_queue.get(key)
        if queue:
            self.start_write(queue.popleft(), fx)
        else:
            self._writing.discard(key)

    def start_read(self, op: ClientOp, fx: Effects) -> None:
        raise NotImplementedError

    def start_write(self, op: ClientOp, fx: Effects) -> None:
        raise NotImplementedError

    def receive(self, src: int, msg: Message, fx: Effects) -> None:
        raise NotImplementedError

    def stores(self, key: Key, value: Any) -> bool:
        """Whether ``value`` currently sits in this node's durable register state."""
        raise NotImplementedError
