"""Run a scenario end to end: simulate, then check."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import QuorumConfig
from ..history import HistoryEvent
from ..lincheck import Verdict, check_all
from ..simnet import LatencyModel, SimResult, Simulator
from .scenario import Scenario
from .workload import ClosedLoopWorkload


@dataclass
class RunOutcome:
    scenario: Scenario
    config: QuorumConfig
    latency: LatencyModel
    result: SimResult
    verdicts: dict[str, Verdict] | None = None

    @property
    def history(self) -> list[HistoryEvent]:
        return self.result.history

    @property
    def linearizable(self) -> bool:
        return self.verdicts is None or all(v.ok for v in self.verdicts.values())

    @property
    def live(self) -> bool:
        return self.result.live

    def region(self, event: HistoryEvent) -> str:
        return self.latency.region(event.node)


def simulate(scn: Scenario) -> tuple[SimResult, QuorumConfig, LatencyModel]:
    cfg = scn.quorum_config()
    latency = scn.latency_model()
    sim = Simulator(
        scn.build_nodes(),
        latency,
        seed=scn.seed,
        fifo=scn.toggles.fifo,
        faults=scn.fault_plan(),
        script=scn.directives(),
    )
    wl = scn.workload
    workload = ClosedLoopWorkload(
        scn.n,
        scn.clients_per_node,
        wl.write_ratio,
        wl.conflict_rate,
        wl.key_space,
        scn.seed,
        duration_ms=scn.duration_ms,
        ops_per_client=wl.ops_per_client,
    )
    return sim.run(workload), cfg, latency


def run_scenario(scn: Scenario, check: bool = True) -> RunOutcome:
    result, cfg, latency = simulate(scn)
    outcome = RunOutcome(scn, cfg, latency, result)
    if check:
        outcome.verdicts = check_all(result.history)
    return outcome
