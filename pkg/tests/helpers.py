"""Small drivers shared by the test modules."""

from __future__ import annotations

from gusreg.core import default_quorums
from gusreg.node import ClientOp
from gusreg.protocols import make_nodes
from gusreg.simnet import FaultPlan, Invocation, LatencyModel, Simulator, StaticWorkload


def fx_for(node):
    return node.effects()


def op(op_id, kind="write", key="k", value=None, client=1):
    return ClientOp(op_id, client, key, kind, value)


def sent(fx, kind=None):
    return [(dst, m) for dst, m in fx.sends if kind is None or m.kind == kind]


def run_static(protocol, n, invocations, *, rtt=10.0, fifo=True, script=(), crashes=(), seed=0, **node_kw):
    cfg = default_quorums(n)
    sim = Simulator(make_nodes(protocol, cfg, **node_kw), LatencyModel.uniform(rtt, n),
                    seed=seed, fifo=fifo, faults=FaultPlan(tuple(crashes)), script=script)
    return sim, sim.run(StaticWorkload(invocations))


def chain(node_kinds, key="k", gap_ms=1.0):
    """Sequential ops: each one starts ``gap_ms`` after the previous returns."""
    out = []
    for i, (node, kind) in enumerate(node_kinds):
        label = f"op{i}"
        after = f"op{i - 1}" if i else None
        out.append(Invocation(node, node, key, kind, at_ms=gap_ms if after else 0.0, after=after, label=label))
    return out
