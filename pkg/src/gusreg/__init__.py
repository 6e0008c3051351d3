"""Simulated Gus atomic register, baselines, and a linearizability checker."""

from .core import INITIAL_TAG, QuorumConfig, Tag, default_quorums, relaxed_quorums, validate_quorums
from .gus import GusNode, safe_to_read
from .baselines import AbdNode, FastOnlyNode
from .protocols import make_nodes
from .simnet import FaultPlan, Crash, Invocation, LatencyModel, ScriptDirective, Simulator

__all__ = [
    "INITIAL_TAG", "QuorumConfig", "Tag", "default_quorums", "relaxed_quorums", "validate_quorums",
    "GusNode", "safe_to_read", "AbdNode", "FastOnlyNode", "make_nodes",
    "FaultPlan", "Crash", "Invocation", "LatencyModel", "ScriptDirective", "Simulator",
]
