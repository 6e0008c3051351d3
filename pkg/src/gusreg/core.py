"""Tags, keys and quorum arithmetic shared by every protocol."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, NamedTuple

BOTTOM = 0  # writer id of the initial value; real node ids start at 1

Key = Hashable


class Tag(NamedTuple):
    """Version identifier: logical timestamp first, writer id breaks ties."""

    ts: int
    id: int

    def __str__(self) -> str:
        return f"({self.ts},{'⊥' if self.id == BOTTOM else self.id})"


INITIAL_TAG = Tag(0, BOTTOM)


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def tag_cmp(t1: Tag, t2: Tag) -> Ordering:
    if t1.ts != t2.ts:
        return Ordering.GREATER if t1.ts > t2.ts else Ordering.LESS
    if t1.id != t2.id:
        return Ordering.GREATER if t1.id > t2.id else Ordering.LESS
    return Ordering.EQUAL


class QuorumError(ValueError):
    pass


@dataclass(frozen=True)
class QuorumConfig:
    n: int
    f: int
    q_read: int
    q_write: int

    def __post_init__(self) -> None:
        ok, why = validate_quorums(self.n, self.q_read, self.q_write)
        # n ≤ 5 with majorities may miss the association bound; the
        # completed-write flag covers that regime instead
        if not ok and (self.n > 5 or not self.bounded_intersection):
            raise QuorumError(why)

    @property
    def bounded_intersection(self) -> bool:
        return all(1 <= q <= self.n for q in (self.q_read, self.q_write)) and 2 * self.q_write > self.n

    @property
    def association_bound(self) -> bool:
        """Whether 2n − 2·q_write − 1 < q_read holds."""
        return 2 * self.n - 2 * self.q_write - 1 < self.q_read

    @classmethod
    def unchecked(cls, n: int, f: int, q_read: int, q_write: int) -> "QuorumConfig":
        """Build a config without the safety inequalities (for the unsafe strawman)."""
        cfg = object.__new__(cls)
        for name, v in (("n", n), ("f", f), ("q_read", q_read), ("q_write", q_write)):
            object.__setattr__(cfg, name, v)
        return cfg

    @property
    def majority(self) -> int:
        return self.n // 2 + 1


def validate_quorums(n: int, q_read: int, q_write: int) -> tuple[bool, str]:
    """Check bounds, write-quorum intersection and the single-association bound.

    Returns ``(ok, diagnostic)``; the diagnostic names the first failing
    inequality, or lists both satisfied ones.
    """
    if n < 1:
        return False, f"n = {n} < 1"
    for name, q in (("q_read", q_read), ("q_write", q_write)):
        if not 1 <= q <= n:
            return False, f"{name} = {q} outside [1, {n}]"
    if not 2 * q_write > n:
        return False, f"2·{q_write} = {2 * q_write} ≯ {n}"
    lhs = 2 * n - 2 * q_write - 1
    if not lhs < q_read:
        return False, f"2·{n}−2·{q_write}−1 = {lhs} ≮ {q_read}"
    return True, f"2·{q_write} = {2 * q_write} > {n}; 2·{n}−2·{q_write}−1 = {lhs} < {q_read}"


def default_quorums(n: int) -> QuorumConfig:
    if n < 3:
        raise QuorumError(f"n = {n}: at least 3 nodes are required")
    if n > 5:
        raise QuorumError(
            f"n = {n}: simple-majority quorums are only safe for n ≤ 5; use relaxed_quorums"
        )
    q = n // 2 + 1
    return QuorumConfig(n=n, f=(n - 1) // 2, q_read=q, q_write=q)


def _min_write_quorum(n: int, q_read: int) -> int:
    # smallest q_write with 2·q_write > n and 2n − 2·q_write − 1 < q_read
    q = n // 2 + 1
    while 2 * n - 2 * q - 1 >= q_read:
        q += 1
    return q


def relaxed_quorums(n: int, f: int, bias: str = "read") -> QuorumConfig:
    """Quorum sizes for n > 5 at reduced resilience ``f``.

    ``bias="read"`` keeps the read quorum at a simple majority and grows the
    write quorum until both safety inequalities hold. ``bias="write"`` takes
    the smallest write quorum for which a matching read quorum (itself at
    least a majority, so reads intersect) is still reachable with f crashes.
    """
    if n < 3:
        raise QuorumError(f"n = {n}: at least 3 nodes are required")
    if f < 1:
        raise QuorumError(f"f = {f}: at least one crash must be tolerated")
    reach = n - f
    majority = n // 2 + 1
    if bias in ("read", "read-optimized"):
        q_read = majority
        q_write = _min_write_quorum(n, q_read)
    elif bias in ("write", "write-optimized"):
        for q_write in range(majority, reach + 1):
            q_read = max(majority, 2 * n - 2 * q_write)
            if q_read <= reach:
                break
        else:
            q_write = reach + 1
            q_read = max(majority, 2 * n - 2 * q_write)
    else:
        raise ValueError(f"unknown bias {bias!r}")
    if q_read > reach:
        raise QuorumError(
            f"(n={n}, f={f}) infeasible: q_read = {q_read} > n−f = {reach}"
        )
    if q_write > reach:
        raise QuorumError(
            f"(n={n}, f={f}) infeasible: 2·{n}−2·q_write−1 < {q_read} needs "
            f"q_write ≥ {q_write} > n−f = {reach}"
        )
    return QuorumConfig(n=n, f=f, q_read=q_read, q_write=q_write)


# (n, f) settings of the published relaxed-resilience quorum table
TABLE2_SETTINGS = ((7, 2), (9, 2), (11, 3), (13, 3))
