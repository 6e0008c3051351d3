"""Gus: MWMR atomic register with speculative timestamps and view exchange.

One :class:`GusNode` bundles a replica's server handlers with the writer and
reader logic of its co-located clients. Writes go out with a speculative tag
(local timestamp + 1) and finish in one round trip unless a quorum member
reports a newer tag, in which case a commit round fixes the tag. Reads learn
the largest tag from a quorum and return once some version at least that new
is known to be stored at a read quorum that includes this node.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .core import BOTTOM, INITIAL_TAG, Key, QuorumConfig, Tag
from .messages import (
    NO_VALUE,
    AckCommit,
    AckRead,
    AckWrite,
    CommitWrite,
    Message,
    Read,
    UpdateView,
    Write,
)
from .node import ClientOp, ConcurrentWriteError, Effects, ProtocolNode

DEFAULT_VALUE = None


@dataclass(slots=True)
class StoredVersion:
    tag: Tag
    value: Any
    writer: int
    seq: int


class KeyState:
    """Replica state for one key."""

    __slots__ = (
        "key", "storage", "by_tag", "cur", "view", "tmp",
        "early_commits", "newest_seq",
    )

    def __init__(self, key: Key, peers):
        initial = StoredVersion(INITIAL_TAG, DEFAULT_VALUE, BOTTOM, 0)
        self.key = key
        self.storage: dict[tuple[int, int], StoredVersion] = {(BOTTOM, 0): initial}
        self.by_tag: dict[Tag, StoredVersion] = {INITIAL_TAG: initial}
        self.cur = INITIAL_TAG
        self.view: dict[int, set[Tag]] = {j: {INITIAL_TAG} for j in peers}
        self.tmp: dict[int, StoredVersion] = {}
        # commit-write that overtook its write, keyed by (writer, seq)
        self.early_commits: dict[tuple[int, int], Tag] = {}
        self.newest_seq: dict[int, int] = {}


@dataclass
class WriteHandle:
    op: ClientOp
    seq: int
    tag: Tag
    phase: int = 1
    acks: dict[int, AckWrite] = field(default_factory=dict)
    commit_acks: set[int] = field(default_factory=set)


@dataclass
class ReadHandle:
    op: ClientOp
    rid: int
    acks: dict[int, AckRead] = field(default_factory=dict)
    tag_max: Optional[Tag] = None
    followers: list[ClientOp] = field(default_factory=list)


def safe_to_read(
    view: Mapping[int, set[Tag]],
    storage: Mapping[Tag, Any],
    self_id: int,
    q_read: int,
    tag_max: Tag,
) -> Optional[tuple[Tag, Any]]:
    """Smallest stored tag ≥ ``tag_max`` evidenced at a read quorum containing ``self_id``.

    A quorum of size ``q_read`` with every member j holding the tag in
    ``view[j]`` exists iff this node's own view holds it and at least
    ``q_read`` views do. Returns ``(tag, storage[tag])`` or ``None``.
    """
    mine = view[self_id]
    for tag in sorted(t for t in storage if t >= tag_max):
        if tag in mine and sum(tag in tags for tags in view.values()) >= q_read:
            return tag, storage[tag]
    return None


class GusNode(ProtocolNode):
    protocol = "gus"

    def __init__(
        self,
        node_id: int,
        config: QuorumConfig,
        *,
        piggyback: bool = False,
        tag_along: bool = False,
        completed_flag: bool = False,
    ):
        super().__init__(node_id, config)
        self.piggyback = piggyback
        self.tag_along = tag_along
        self.completed_flag = completed_flag
        self.keys: dict[Key, KeyState] = {}
        self.writes: dict[tuple[Key, int], WriteHandle] = {}
        self._active: dict[Key, WriteHandle] = {}
        self.reads: dict[int, ReadHandle] = {}
        self._open_reads: dict[Key, list[ReadHandle]] = defaultdict(list)
        self._seq = 0
        self._rid = 0
        self._dispatch = {
            Write: self.on_write,
            AckWrite: self.writer_on_ack,
            CommitWrite: self.on_commit_write,
            AckCommit: self.writer_on_ack,
            Read: self.on_read,
            AckRead: self.reader_on_ack,
            UpdateView: self.on_update_view,
        }

    def state(self, key: Key) -> KeyState:
        ks = self.keys.get(key)
        if ks is None:
            ks = self.keys[key] = KeyState(key, self.peers)
        return ks

    def receive(self, src: int, msg: Message, fx: Effects) -> None:
        self._dispatch[type(msg)](src, msg, fx)

    def stores(self, key: Key, value: Any) -> bool:
        ks = self.keys.get(key)
        return ks is not None and any(v.value == value for v in ks.storage.values())

    # writer

    def start_write(self, op: ClientOp, fx: Effects) -> None:
        self.writer_invoke(op, fx)

    def writer_invoke(self, op: ClientOp, fx: Effects) -> WriteHandle:
        if op.key in self._active:
            raise ConcurrentWriteError(f"node {self.id} already writing key {op.key!r}")
        ks = self.state(op.key)
        self._seq += 1
        handle = WriteHandle(op, self._seq, Tag(ks.cur.ts + 1, self.id))
        self.writes[(op.key, handle.seq)] = handle
        self._active[op.key] = handle
        fx.broadcast(Write(op.key, handle.tag, op.value, handle.seq))
        return handle

    def writer_on_ack(self, src: int, msg: AckWrite | AckCommit, fx: Effects) -> None:
        handle = self.writes.get((msg.key, msg.seq))
        if handle is None:
            return
        q = self.config.q_write
        if isinstance(msg, AckWrite):
            if handle.phase != 1 or src in handle.acks:
                return
            handle.acks[src] = msg
            if len(handle.acks) < q:
                return
            # a newer write its own node reports unfinished is concurrent with
            # this one, so it may be ordered after us
            conflicts = [a for a in handle.acks.values() if a.tag > handle.tag and a.completed]
            if not conflicts:
                self._finish_write(handle, 1, fx)
                return
            ts = max(a.tag.ts for a in handle.acks.values()) + 1
            handle.tag = Tag(ts, self.id)
            handle.phase = 2
            fx.broadcast(CommitWrite(msg.key, handle.tag, handle.seq))
        else:
            if handle.phase != 2 or msg.tag != handle.tag:
                return
            handle.commit_acks.add(src)
            if len(handle.commit_acks) >= q:
                self._finish_write(handle, 2, fx)

    def _finish_write(self, handle: WriteHandle, phases: int, fx: Effects) -> None:
        key = handle.op.key
        ks = self.state(key)
        stored = ks.storage.get((self.id, handle.seq))
        if stored is None or stored.tag != handle.tag:
            self._put(ks, self.id, handle.seq, handle.tag, handle.op.value, fx)
        del self.writes[(key, handle.seq)]
        del self._active[key]
        fx.complete(handle.op, None, handle.tag, phases)
        self.write_finished(key, fx)
        self._recheck_reads(ks, fx)

    # reader

    def start_read(self, op: ClientOp, fx: Effects) -> None:
        self.reader_invoke(op, fx)

    def reader_invoke(self, op: ClientOp, fx: Effects) -> ReadHandle:
        open_reads = self._open_reads[op.key]
        if self.tag_along and open_reads:
            leader = open_reads[0]
            leader.followers.append(op)
            return leader
        self._rid += 1
        handle = ReadHandle(op, self._rid)
        self.reads[handle.rid] = handle
        open_reads.append(handle)
        fx.broadcast(Read(op.key, handle.rid))
        return handle

    def reader_on_ack(self, src: int, msg: AckRead, fx: Effects) -> None:
        handle = self.reads.get(msg.rid)
        if handle is None or handle.tag_max is not None or src in handle.acks:
            return
        handle.acks[src] = msg
        if len(handle.acks) < self.config.q_read:
            return
        best_src, best = max(handle.acks.items(), key=lambda item: item[1].tag)
        handle.tag_max = best.tag
        ks = self.state(msg.key)
        if self.piggyback and best.value is not NO_VALUE:
            self._learn_piggyback(ks, best_src, best, fx)
        found = safe_to_read(ks.view, ks.by_tag, self.id, self.config.q_read, handle.tag_max)
        if found is not None:
            self._finish_read(handle, found[1], 1, fx)

    def _learn_piggyback(self, ks: KeyState, src: int, ack: AckRead, fx: Effects) -> None:
        tag = ack.tag
        # our own write only enters storage once it has completed
        if tag.id != self.id and tag not in ks.by_tag and tag > ks.cur:
            self._put(ks, tag.id, ack.seq, tag, ack.value, fx)
        if tag in ks.by_tag:
            self._learn_view(ks, src, tag)

    def _finish_read(self, handle: ReadHandle, version: StoredVersion, phases: int, fx: Effects) -> None:
        del self.reads[handle.rid]
        self._open_reads[handle.op.key].remove(handle)
        fx.complete(handle.op, version.value, version.tag, phases)
        for op in handle.followers:
            fx.complete(op, version.value, version.tag, 0)

    def _recheck_reads(self, ks: KeyState, fx: Effects) -> None:
        waiting = [h for h in self._open_reads.get(ks.key, ()) if h.tag_max is not None]
        for handle in waiting:
            found = safe_to_read(ks.view, ks.by_tag, self.id, self.config.q_read, handle.tag_max)
            if found is not None:
                self._finish_read(handle, found[1], 2, fx)

    # server

    def on_write(self, src: int, msg: Write, fx: Effects) -> None:
        ks = self.state(msg.key)
        ident = (src, msg.seq)
        prior = ks.cur
        pending = ks.tmp.get(src)
        known = ident in ks.storage or (pending is not None and pending.seq == msg.seq)
        if not known:
            ks.newest_seq[src] = max(ks.newest_seq.get(src, 0), msg.seq)
            if src != self.id and msg.tag > ks.cur:
                self._put(ks, src, msg.seq, msg.tag, msg.value, fx)
            elif pending is None or pending.seq < msg.seq:
                ks.tmp[src] = StoredVersion(msg.tag, msg.value, src, msg.seq)
        fx.send(src, self._ack_write(ks, prior, msg))
        early = ks.early_commits.pop(ident, None)
        if early is not None:
            self._apply_commit(ks, src, msg.seq, early, fx)
        self._recheck_reads(ks, fx)

    def on_commit_write(self, src: int, msg: CommitWrite, fx: Effects) -> None:
        ks = self.state(msg.key)
        if self._apply_commit(ks, src, msg.seq, msg.tag, fx):
            self._recheck_reads(ks, fx)
        elif ks.newest_seq.get(src, 0) < msg.seq:
            ks.early_commits[(src, msg.seq)] = msg.tag
        # else: a later write from src already arrived, so this one finished long ago

    def _apply_commit(self, ks: KeyState, writer: int, seq: int, tag: Tag, fx: Effects) -> bool:
        pending = ks.tmp.get(writer)
        if not ((pending is not None and pending.seq == seq) or (writer, seq) in ks.storage):
            return False
        value = pending.value if pending is not None and pending.seq == seq else ks.storage[(writer, seq)].value
        self._put(ks, writer, seq, tag, value, fx)
        fx.send(writer, AckCommit(ks.key, seq, tag))
        return True

    def on_read(self, src: int, msg: Read, fx: Effects) -> None:
        ks = self.state(msg.key)
        if self.piggyback:
            current = ks.by_tag[ks.cur]
            fx.send(src, AckRead(msg.key, msg.rid, ks.cur, current.value, current.seq))
        else:
            fx.send(src, AckRead(msg.key, msg.rid, ks.cur))

    def on_update_view(self, src: int, msg: UpdateView, fx: Effects) -> None:
        ks = self.state(msg.key)
        if msg.tag not in ks.view[src]:
            self._learn_view(ks, src, msg.tag)
            self._recheck_reads(ks, fx)

    def _ack_write(self, ks: KeyState, prior: Tag, msg: Write) -> AckWrite:
        """Report ``prior``, or this node's own unfinished write if it is newer.

        Only a write's own node knows it has not completed yet, so every other
        tag is reported as completed.
        """
        if self.completed_flag:
            own = self._active.get(ks.key)
            if own is not None and own.tag > prior:
                return AckWrite(ks.key, msg.seq, own.tag, False, msg.tag)
        return AckWrite(ks.key, msg.seq, prior, True, msg.tag)

    # state updates

    def _put(self, ks: KeyState, writer: int, seq: int, tag: Tag, value: Any, fx: Effects) -> None:
        """Store (or re-tag) writer's seq-th write under ``tag`` and announce it."""
        ident = (writer, seq)
        old = ks.storage.get(ident)
        if old is not None and ks.by_tag.get(old.tag) is old:
            del ks.by_tag[old.tag]
        pending = ks.tmp.get(writer)
        if pending is not None and pending.seq == seq:
            del ks.tmp[writer]
        version = StoredVersion(tag, value, writer, seq)
        ks.storage[ident] = version
        ks.by_tag[tag] = version
        if tag > ks.cur:
            ks.cur = tag
        self._learn_view(ks, self.id, tag)
        fx.broadcast(UpdateView(ks.key, tag))

    def _learn_view(self, ks: KeyState, j: int, tag: Tag) -> None:
        ks.view[j].add(tag)
