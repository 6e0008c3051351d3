"""Closed-loop clients co-located with nodes."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from ..history import HistoryEvent
from ..node import READ, WRITE
from ..simnet import Invocation

HOT_KEY = "hot"


@dataclass(frozen=True)
class Client:
    id: int
    node: int


def place_clients(n: int, per_node: int) -> list[Client]:
    return [Client((node - 1) * per_node + k + 1, node) for node in range(1, n + 1) for k in range(per_node)]


class ClosedLoopWorkload:
    """Every client issues its next op the moment the previous one returns.

    With probability ``conflict_rate`` an op targets the shared hot key,
    otherwise one of the client's own ``key_space`` keys. Clients stop after
    ``ops_per_client`` ops if given, else once ``duration_ms`` has passed.
    """

    def __init__(
        self,
        n: int,
        clients_per_node: int,
        write_ratio: float,
        conflict_rate: float,
        key_space: int,
        seed: int,
        duration_ms: float = 10_000,
        ops_per_client: Optional[int] = None,
    ):
        self.clients = place_clients(n, clients_per_node)
        self.by_id = {c.id: c for c in self.clients}
        self.write_ratio = write_ratio
        self.conflict_rate = conflict_rate
        self.key_space = key_space
        self.duration_ms = duration_ms
        self.ops_per_client = ops_per_client
        self.rngs = {c.id: random.Random(f"{seed}:{c.id}") for c in self.clients}
        self.issued = {c.id: 0 for c in self.clients}

    def draw(self, client: Client) -> tuple[str, str]:
        rng = self.rngs[client.id]
        kind = WRITE if rng.random() < self.write_ratio else READ
        if rng.random() < self.conflict_rate:
            key = HOT_KEY
        else:
            key = f"c{client.id}.{rng.randrange(self.key_space)}"
        return kind, key

    def _next(self, client: Client, now_ms: float) -> list[Invocation]:
        if self.ops_per_client is not None:
            if self.issued[client.id] >= self.ops_per_client:
                return []
        elif now_ms >= self.duration_ms:
            return []
        self.issued[client.id] += 1
        kind, key = self.draw(client)
        return [Invocation(client.id, client.node, key, kind, at_ms=now_ms)]

    def start(self) -> Iterable[Invocation]:
        out = []
        for c in self.clients:
            out.extend(self._next(c, 0.0))
        return out

    def on_complete(self, event: HistoryEvent, now_ms: float) -> Iterable[Invocation]:
        return self._next(self.by_id[event.client], now_ms)


def gen_workload(scenario, rng: random.Random | None = None) -> Iterator[tuple[int, str, str]]:
    """Endless stream of (client, kind, key) draws in round-robin client order.

    Mirrors what the closed loop issues, without running a simulation.
    """
    seed = scenario.seed if rng is None else rng.randrange(2**32)
    wl = ClosedLoopWorkload(
        scenario.n,
        scenario.clients_per_node,
        scenario.workload.write_ratio,
        scenario.workload.conflict_rate,
        scenario.workload.key_space,
        seed,
    )
    while True:
        for c in wl.clients:
            kind, key = wl.draw(c)
            yield c.id, kind, key
