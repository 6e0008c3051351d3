"""Declarative run description, loaded from YAML or JSON."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core import QuorumConfig, QuorumError, default_quorums, relaxed_quorums, validate_quorums
from ..baselines import fastonly_config
from ..protocols import make_nodes
from ..simnet import Crash, FaultPlan, LatencyModel, ScriptDirective, latency_profile


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WorkloadSpec(_Strict):
    write_ratio: float = Field(0.055, ge=0, le=1)
    conflict_rate: float = Field(0.0, ge=0, le=1)
    key_space: int = Field(8, ge=1)  # private keys per client
    value_size: int = Field(16, ge=0)  # recorded only; payloads are synthetic
    ops_per_client: Optional[int] = Field(None, ge=1)  # overrides duration when set


class Toggles(_Strict):
    piggyback: bool = False
    tag_along: bool = False
    n45_completed_flag: Optional[bool] = None  # None: protocol default for n
    fifo: bool = False
    jitter_ms: float = Field(0.0, ge=0)


class CrashSpec(_Strict):
    node: int
    at_ms: Optional[float] = None
    after_op: Optional[str] = None

    @model_validator(mode="after")
    def _one_trigger(self):
        if (self.at_ms is None) == (self.after_op is None):
            raise ValueError("give exactly one of at_ms / after_op")
        return self


class DirectiveSpec(_Strict):
    action: Literal["drop", "deliver_at", "delay", "hold_until"]
    src: Optional[int] = None
    dst: Optional[int] = None
    kind: Optional[str] = None
    key: Optional[Union[str, int]] = None
    occurrence: Optional[int] = Field(None, ge=1)
    at_ms: Optional[float] = None
    delay_ms: Optional[float] = None
    until: Optional[str] = None


class Scenario(_Strict):
    name: str = "scenario"
    protocol: Literal["gus", "abd", "fastonly"] = "gus"
    n: int = Field(3, ge=3)
    f: Optional[int] = Field(None, ge=0)
    q_read: Optional[int] = None
    q_write: Optional[int] = None
    quorum_bias: Literal["read", "write"] = "read"
    latency: Union[str, list[list[float]]] = "table3"
    regions: Optional[list[str]] = None
    clients_per_node: int = Field(1, ge=1)
    workload: WorkloadSpec = WorkloadSpec()
    duration_ms: float = Field(10_000, gt=0)
    warmup_ms: float = Field(1_000, ge=0)
    cooldown_ms: float = Field(1_000, ge=0)
    seed: int = 0
    toggles: Toggles = Toggles()
    faults: list[CrashSpec] = []
    script: list[DirectiveSpec] = []

    @model_validator(mode="after")
    def _consistent(self):
        if (self.q_read is None) != (self.q_write is None):
            raise ValueError("give both q_read and q_write or neither")
        if self.toggles.n45_completed_flag and self.protocol != "gus":
            raise ValueError("n45_completed_flag only applies to protocol gus")
        if self.protocol != "gus" and (self.toggles.piggyback or self.toggles.tag_along):
            raise ValueError("read optimizations only apply to protocol gus")
        cfg = self.quorum_config()  # raises on infeasible quorums
        if len(self.faults) > cfg.f:
            raise ValueError(f"fault plan crashes {len(self.faults)} nodes but f = {cfg.f}")
        for crash in self.faults:
            if not 1 <= crash.node <= self.n:
                raise ValueError(f"crash of unknown node {crash.node}")
        return self

    def quorum_config(self) -> QuorumConfig:
        if self.protocol == "fastonly":
            if self.q_read is not None:
                return QuorumConfig.unchecked(self.n, self.f or 0, self.q_read, self.q_write)
            return fastonly_config(self.n, self.f)
        if self.q_read is not None:
            ok, why = validate_quorums(self.n, self.q_read, self.q_write)
            if not ok and self.n > 5:
                raise QuorumError(why)
            f = self.f if self.f is not None else self.n - max(self.q_read, self.q_write)
            if self.n - f < max(self.q_read, self.q_write):
                raise QuorumError(f"quorums of size {max(self.q_read, self.q_write)} unreachable with f = {f}")
            return QuorumConfig(self.n, f, self.q_read, self.q_write)
        if self.n <= 5:
            cfg = default_quorums(self.n)
            if self.f is not None and self.f != cfg.f:
                if self.n - self.f < cfg.q_read:
                    raise QuorumError(f"f = {self.f} leaves fewer than {cfg.q_read} live nodes")
                cfg = QuorumConfig(self.n, self.f, cfg.q_read, cfg.q_write)
            return cfg
        if self.f is None:
            raise QuorumError(f"n = {self.n} > 5 needs an explicit f for relaxed quorums")
        return relaxed_quorums(self.n, self.f, self.quorum_bias)

    def completed_flag(self) -> bool:
        flag = self.toggles.n45_completed_flag
        return flag if flag is not None else default_completed_flag(self.n)

    def latency_model(self) -> LatencyModel:
        return latency_profile(self.latency, self.n, self.toggles.jitter_ms, self.regions)

    def build_nodes(self):
        return make_nodes(
            self.protocol,
            self.quorum_config(),
            piggyback=self.toggles.piggyback,
            tag_along=self.toggles.tag_along,
            completed_flag=self.protocol == "gus" and self.completed_flag(),
        )

    def fault_plan(self) -> FaultPlan:
        return FaultPlan(tuple(Crash(c.node, c.at_ms, c.after_op) for c in self.faults))

    def directives(self) -> list[ScriptDirective]:
        return [ScriptDirective(**d.model_dump()) for d in self.script]

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        return cls.model_validate(data or {})


def default_completed_flag(n: int) -> bool:
    """Whether Gus uses the completed-write flag by default for n nodes."""
    return n == 5
