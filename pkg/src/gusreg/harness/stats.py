"""Latency percentiles and empirical CDFs per op kind and client region."""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

from .records import OpRecord

PERCENTILES = (50, 90, 99, 99.9)
ALL = "all"


def trim(records: Iterable[OpRecord], warmup_ms: float, cooldown_ms: float) -> list[OpRecord]:
    """Completed ops invoked after the warmup and finished before the cooldown."""
    done = [r for r in records if r.response_ms is not None]
    if not done:
        return []
    end = max(r.response_ms for r in done) - cooldown_ms
    return [r for r in done if r.invoke_ms >= warmup_ms and r.response_ms <= end]


def _groups(records: Sequence[OpRecord]) -> dict[str, dict[str, np.ndarray]]:
    out: dict[str, dict[str, list[float]]] = {}
    for r in records:
        if r.latency_ms is None:
            continue
        for region in (r.region or "?", ALL):
            out.setdefault(r.kind, {}).setdefault(region, []).append(r.latency_ms)
    return {k: {reg: np.asarray(v) for reg, v in sorted(d.items())} for k, d in sorted(out.items())}


def summarize(records: Sequence[OpRecord]) -> dict:
    summary: dict = {}
    for kind, regions in _groups(records).items():
        for region, lat in regions.items():
            row = {"count": int(lat.size), "mean": round(float(lat.mean()), 3)}
            for p in PERCENTILES:
                row[f"p{p:g}"] = round(float(np.percentile(lat, p)), 3)
            summary.setdefault(kind, {})[region] = row
    return summary


def cdf(latencies: np.ndarray, step_ms: float = 1.0) -> list[tuple[float, float]]:
    """(upper bin edge, cumulative fraction) at ``step_ms`` resolution, only where mass lands."""
    if latencies.size == 0:
        return []
    bins = np.floor(latencies / step_ms).astype(int)
    edges, counts = np.unique(bins, return_counts=True)
    cum = np.cumsum(counts) / latencies.size
    return [(float((b + 1) * step_ms), round(float(c), 6)) for b, c in zip(edges, cum)]


def cdf_tables(records: Sequence[OpRecord], step_ms: float = 1.0) -> dict:
    return {
        kind: {region: cdf(lat, step_ms) for region, lat in regions.items()}
        for kind, regions in _groups(records).items()
    }


def mass_near(records: Sequence[OpRecord], kind: str, target_ms: float, tol_ms: float = 1.0) -> float:
    lat = np.asarray([r.latency_ms for r in records if r.kind == kind and r.latency_ms is not None])
    if lat.size == 0:
        return math.nan
    return float(np.mean(np.abs(lat - target_ms) <= tol_ms))


def format_summary(summary: dict) -> str:
    if not summary:
        return "(no completed operations)"
    cols = ["count", "mean"] + [f"p{p:g}" for p in PERCENTILES]
    lines = [f"{'kind':<6} {'region':<8} " + " ".join(f"{c:>9}" for c in cols)]
    for kind, regions in summary.items():
        for region, row in regions.items():
            lines.append(f"{kind:<6} {region:<8} " + " ".join(f"{row[c]:>9g}" for c in cols))
    return "\n".join(lines)


def format_cdf(tables: dict) -> str:
    lines = []
    for kind, regions in tables.items():
        for region, points in regions.items():
            lines.append(f"# {kind} {region}")
            lines += [f"{ms:>8g} ms  {frac:.4f}" for ms, frac in points]
    return "\n".join(lines)


def stats_json(records: Sequence[OpRecord]) -> str:
    return json.dumps({"summary": summarize(records), "cdf": cdf_tables(records)}, indent=2, sort_keys=True)
