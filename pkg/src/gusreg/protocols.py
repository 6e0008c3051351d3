"""Node factories keyed by protocol name."""

from __future__ import annotations

from .baselines import AbdNode, FastOnlyNode, fastonly_config
from .core import QuorumConfig, default_quorums
from .gus import GusNode
from .node import ProtocolNode

PROTOCOLS = ("gus", "abd", "fastonly")


def make_nodes(
    protocol: str,
    config: QuorumConfig,
    *,
    piggyback: bool = False,
    tag_along: bool = False,
    completed_flag: bool = False,
) -> list[ProtocolNode]:
    ids = range(1, config.n + 1)
    if protocol == "gus":
        return [
            GusNode(i, config, piggyback=piggyback, tag_along=tag_along, completed_flag=completed_flag)
            for i in ids
        ]
    if protocol == "abd":
        return [AbdNode(i, config) for i in ids]
    if protocol == "fastonly":
        return [FastOnlyNode(i, config) for i in ids]
    raise ValueError(f"unknown protocol {protocol!r}; expected one of {', '.join(PROTOCOLS)}")


def config_for(protocol: str, n: int, f: int | None = None) -> QuorumConfig:
    """Default quorums for a protocol: majorities, or n−f for the strawman."""
    if protocol == "fastonly":
        return fastonly_config(n, f)
    cfg = default_quorums(n)
    if f is not None and f != cfg.f:
        return QuorumConfig(n=n, f=f, q_read=cfg.q_read, q_write=cfg.q_write)
    return cfg
