"""Command-line entry point: ``gusreg run|quorum|impossible|check|stats``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from .core import TABLE2_SETTINGS, QuorumError, relaxed_quorums, validate_quorums
from .harness import stats as st
from .harness.impossible import run_impossible
from .harness.records import CsvFormatError, read_csv, to_history, to_records, write_csv
from .harness.runner import run_scenario
from .harness.scenario import Scenario
from .lincheck import MalformedHistory, check_all
from .simnet import ConfigError, ScriptError

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_LIVENESS = 0, 1, 2, 3


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_run(args) -> int:
    scn = Scenario.load(args.scenario)
    if args.seed is not None:
        scn = scn.model_copy(update={"seed": args.seed})
    outcome = run_scenario(scn, check=not args.no_check)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    records = to_records(outcome.history, outcome.latency.region)
    write_csv(records, out / "history.csv")
    tel = outcome.result.telemetry.as_dict()
    tel["quorums"] = {"n": outcome.config.n, "f": outcome.config.f,
                      "q_read": outcome.config.q_read, "q_write": outcome.config.q_write}
    tel["operations"] = len(records)
    tel["linearizable"] = outcome.linearizable if outcome.verdicts is not None else None
    (out / "telemetry.json").write_text(json.dumps(tel, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    trimmed = st.trim(records, scn.warmup_ms, scn.cooldown_ms)
    table = st.format_summary(st.summarize(trimmed))
    (out / "stats.txt").write_text(table + "\n", encoding="utf-8")
    (out / "stats.json").write_text(st.stats_json(trimmed) + "\n", encoding="utf-8")
    print(f"{scn.name}: {len(records)} ops, {tel['total_sent']} messages, trace {tel['trace_hash'][:16]}")
    print(table)
    code = EXIT_OK
    if outcome.verdicts is not None:
        bad = [v for v in outcome.verdicts.values() if not v.ok]
        print(f"linearizability: {'ok' if not bad else f'VIOLATION on {len(bad)} key(s)'}"
              f" ({len(outcome.verdicts)} keys checked)")
        for v in bad[:3]:
            print(v.explain())
        if bad:
            code = EXIT_VIOLATION
    if not outcome.live:
        print(f"liveness failure: blocked ops {outcome.result.telemetry.blocked}")
        code = code or EXIT_LIVENESS
    print(f"output written to {out}")
    return code


def _quorum_row(n: int, f: int, bias: str) -> dict:
    cfg = relaxed_quorums(n, f, bias)
    _, why = validate_quorums(n, cfg.q_read, cfg.q_write)
    return {"n": n, "f": f, "q_read": cfg.q_read, "q_write": cfg.q_write, "inequalities": why}


def cmd_quorum(args) -> int:
    if args.table2:
        rows = [_quorum_row(n, f, args.bias) for n, f in TABLE2_SETTINGS]
    else:
        if args.n is None:
            return _err("give --n (and --f) or --table2")
        f = args.f if args.f is not None else (args.n - 1) // 2
        if args.n <= 5 and args.f is None:
            q = args.n // 2 + 1
            ok, why = validate_quorums(args.n, q, q)
            rows = [{"n": args.n, "f": f, "q_read": q, "q_write": q, "inequalities": why}]
        else:
            rows = [_quorum_row(args.n, f, args.bias)]
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'n':>3} {'f':>3}  read/write  checks")
        for r in rows:
            print(f"{r['n']:>3} {r['f']:>3}  {r['q_read']:>4}/{r['q_write']:<5}  {r['inequalities']}")
    return EXIT_OK


def cmd_impossible(args) -> int:
    if args.gus:
        runs = run_impossible(gus=True, gus_n=args.n or 5)
    else:
        runs = run_impossible(args.which, args.n or 7)
    for ex in runs:
        print(ex.report())
    return EXIT_OK if all(ex.as_expected for ex in runs) else EXIT_VIOLATION


def cmd_check(args) -> int:
    verdicts = check_all(to_history(read_csv(args.history)))
    bad = [v for v in verdicts.values() if not v.ok]
    for v in bad:
        print(v.explain())
    print(f"{len(verdicts)} keys, {len(bad)} violating")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_stats(args) -> int:
    records = st.trim(read_csv(args.history), args.warmup, args.cooldown)
    if args.json:
        print(st.stats_json(records))
    else:
        print(st.format_summary(st.summarize(records)))
        if records:
            print()
            print(st.format_cdf(st.cdf_tables(records, args.step)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gusreg", description="Simulated Gus register harness")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario file and check the history")
    run.add_argument("scenario")
    run.add_argument("-o", "--output", default="out")
    run.add_argument("--seed", type=int)
    run.add_argument("--no-check", action="store_true")
    run.set_defaults(func=cmd_run)

    q = sub.add_parser("quorum", help="quorum sizes and the safety inequalities")
    q.add_argument("--n", type=int)
    q.add_argument("--f", type=int)
    q.add_argument("--bias", choices=("read", "write"), default="read")
    q.add_argument("--table2", action="store_true", help="print the four relaxed-resilience settings")
    q.add_argument("--json", action="store_true")
    q.set_defaults(func=cmd_quorum)

    imp = sub.add_parser("impossible", help="replay the adversarial executions")
    imp.add_argument("which", nargs="?", default="all", choices=("e1", "e2", "e3", "all"))
    imp.add_argument("--n", type=int, help="node count (7 for the strawman, 5 with --gus)")
    imp.add_argument("--gus", action="store_true", help="run the matching attack against Gus")
    imp.set_defaults(func=cmd_impossible)

    chk = sub.add_parser("check", help="check a history CSV for linearizability")
    chk.add_argument("history")
    chk.set_defaults(func=cmd_check)

    sts = sub.add_parser("stats", help="latency percentiles and CDF from a history CSV")
    sts.add_argument("history")
    sts.add_argument("--json", action="store_true")
    sts.add_argument("--warmup", type=float, default=0.0)
    sts.add_argument("--cooldown", type=float, default=0.0)
    sts.add_argument("--step", type=float, default=1.0, help="CDF resolution in ms")
    sts.set_defaults(func=cmd_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        lines = [f"{'.'.join(str(x) for x in e['loc']) or 'scenario'}: {e['msg']}" for e in exc.errors()]
        return _err("invalid scenario\n  " + "\n  ".join(lines))
    except (QuorumError, ConfigError, ScriptError, CsvFormatError, MalformedHistory,
            FileNotFoundError, ValueError) as exc:
        return _err(str(exc))


if __name__ == "__main__":
    sys.exit(main())
