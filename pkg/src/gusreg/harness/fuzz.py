"""Seeded random scenarios for safety and fast-path sweeps."""

from __future__ import annotations

import random

from .scenario import Scenario


def random_rtt_matrix(rng: random.Random, n: int, lo: float = 1, hi: float = 200) -> list[list[float]]:
    m = [[0.2] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            m[i][j] = m[j][i] = round(rng.uniform(lo, hi), 1)
    return m


def fuzz_scenario(protocol: str, n: int, seed: int, *, zero_conflict: bool = False, **toggles) -> Scenario:
    """A random adversarial scenario; the same (n, seed) gives the same setting for every protocol.

    Zero-conflict scenarios keep channels FIFO and nodes alive, so only the
    network shape and workload vary.
    """
    rng = random.Random(f"fuzz:{n}:{seed}:{zero_conflict}")
    f = (n - 1) // 2
    latency = random_rtt_matrix(rng, n)
    fifo = zero_conflict or rng.random() < 0.5
    jitter = 0.0 if zero_conflict else rng.choice((0.0, round(rng.uniform(1, 80), 1)))
    crashes = []
    if not zero_conflict:
        for node in rng.sample(range(1, n + 1), rng.randint(0, f)):
            crashes.append({"node": node, "at_ms": round(rng.uniform(0, 1500), 1)})
    workload = {
        "write_ratio": round(rng.uniform(0.05, 1.0), 2),
        "conflict_rate": 0.0 if zero_conflict else round(rng.random(), 2),
        "key_space": rng.randint(1, 3),
        "ops_per_client": rng.randint(5, 15),
    }
    return Scenario(
        name=f"fuzz-{protocol}-n{n}-s{seed}",
        protocol=protocol,
        n=n,
        latency=latency,
        clients_per_node=rng.randint(1, 3),
        workload=workload,
        seed=seed,
        toggles={"fifo": fifo, "jitter_ms": jitter, **toggles},
        faults=crashes,
    )
