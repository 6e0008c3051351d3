"""Wire messages for Gus and the baseline protocols.

Every message carries the key it concerns; the sender id travels in the
simulator envelope. ``kind`` is the name scripts and telemetry match on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar

from .core import Key, Tag

NO_VALUE: Any = object()  # marks an ack-read without a piggybacked value


@dataclass(frozen=True, slots=True)
class Message:
    kind: ClassVar[str] = "message"
    key: Key


# Gus


@dataclass(frozen=True, slots=True)
class Write(Message):
    kind: ClassVar[str] = "write"
    tag: Tag
    value: Any
    seq: int


@dataclass(frozen=True, slots=True)
class AckWrite(Message):
    kind: ClassVar[str] = "ack-write"
    seq: int
    tag: Tag  # responder's tag before it handled the write
    completed: bool  # False only for the responder's own unfinished write
    echo: Tag  # tag of the write being acknowledged


@dataclass(frozen=True, slots=True)
class CommitWrite(Message):
    kind: ClassVar[str] = "commit-write"
    tag: Tag
    seq: int


@dataclass(frozen=True, slots=True)
class AckCommit(Message):
    kind: ClassVar[str] = "ack-commit"
    seq: int
    tag: Tag


@dataclass(frozen=True, slots=True)
class Read(Message):
    kind: ClassVar[str] = "read"
    rid: int


@dataclass(frozen=True, slots=True)
class AckRead(Message):
    kind: ClassVar[str] = "ack-read"
    rid: int
    tag: Tag
    value: Any = NO_VALUE
    seq: int = -1  # writer's op index for the piggybacked value


@dataclass(frozen=True, slots=True)
class UpdateView(Message):
    kind: ClassVar[str] = "update-view"
    tag: Tag


# ABD


@dataclass(frozen=True, slots=True)
class AbdQuery(Message):
    kind: ClassVar[str] = "abd-query"
    rid: int


@dataclass(frozen=True, slots=True)
class AbdQueryReply(Message):
    kind: ClassVar[str] = "abd-query-reply"
    rid: int
    tag: Tag
    value: Any


@dataclass(frozen=True, slots=True)
class AbdPropagate(Message):
    kind: ClassVar[str] = "abd-propagate"
    rid: int
    tag: Tag
    value: Any


@dataclass(frozen=True, slots=True)
class AbdPropagateAck(Message):
    kind: ClassVar[str] = "abd-propagate-ack"
    rid: int


# FastOnly strawman


@dataclass(frozen=True, slots=True)
class FoWrite(Message):
    kind: ClassVar[str] = "fo-write"
    rid: int
    tag: Tag
    value: Any


@dataclass(frozen=True, slots=True)
class FoWriteAck(Message):
    kind: ClassVar[str] = "fo-write-ack"
    rid: int


@dataclass(frozen=True, slots=True)
class FoRead(Message):
    kind: ClassVar[str] = "fo-read"
    rid: int


@dataclass(frozen=True, slots=True)
class FoReadReply(Message):
    kind: ClassVar[str] = "fo-read-reply"
    rid: int
    tag: Tag
    value: Any


GUS_KINDS = ("write", "ack-write", "commit-write", "ack-commit", "read", "ack-read", "update-view")
WRITE_KINDS = frozenset(
    {"write", "ack-write", "commit-write", "ack-commit", "update-view", "fo-write", "fo-write-ack"}
)
