"""Command-line entry point: ``plan``, ``explain`` and ``simulate``.

Exit codes: 0 success, 1 input error (bad arguments, unreadable or invalid
documents, unknown candidate), 2 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path

from lakecompact.config import CliConfig, load_config
from lakecompact.engine import explain_candidate, plan_document, run_pipeline
from lakecompact.errors import ConfigError, InputError
from lakecompact.ingest import load_snapshot
from lakecompact.scheduler import build_schedule
from lakecompact.serde import canonical_dumps

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2

log = logging.getLogger("lakecompact")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lakecompact", description="Plan and simulate small-file compaction for lake tables.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="write the compaction plan and dispatch schedule as canonical JSON")
    p.add_argument("--snapshot", required=True, type=Path)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--now", required=True, type=int, help="decision time, epoch seconds")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--lenient", action="store_true", help="ignore unknown snapshot fields")

    e = sub.add_parser("explain", help="show how one candidate was filtered, scored and selected")
    e.add_argument("--snapshot", required=True, type=Path)
    e.add_argument("--config", required=True, type=Path)
    e.add_argument("--candidate", required=True, help="candidate id, e.g. db.table or db.table/partition")
    e.add_argument("--now", type=int, help="decision time (default: snapshot captured_at)")
    e.add_argument("--json", action="store_true", help="emit canonical JSON")
    e.add_argument("--lenient", action="store_true")

    s = sub.add_parser("simulate", help="run the closed-loop simulator")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path, help="directory for metrics CSVs and event logs")
    s.add_argument("--compare", action="store_true", help="run the baseline plus every configured strategy")
    return parser


def _emit(data: bytes, out: Path | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        out.write_bytes(data)


def cmd_plan(args) -> int:
    cfg = load_config(args.config)
    snapshot = load_snapshot(args.snapshot, lenient=args.lenient)
    result = run_pipeline(snapshot, cfg.engine, args.now)
    schedule = build_schedule(result.plan, cfg.max_parallel, serialize_tables=cfg.serialize_tables)
    _emit(canonical_dumps(plan_document(result.plan, schedule)), args.out)
    return EXIT_OK


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def explain_text(info: dict) -> str:
    lines = [f"candidate: {info['candidate_id']}"]
    scope = info["scope"]
    where = f"{scope['database']}.{scope['table']}"
    if scope.get("partition_key") is not None:
        where += f" partition={scope['partition_key']}"
    lines.append(f"scope: {scope['kind']} {where}")
    st = info["stats"]
    lines.append(f"files: {st['file_count']} ({st['small_file_count']} small), bytes: {st['total_bytes']}")
    flt = info["filter"]
    lines.append("filter: kept" if flt["kept"] else f"filter: dropped by {flt['rule']} ({flt['reason']})")
    lines.append("traits:")
    normalized = info["traits"]["normalized"] or {}
    for name, raw in sorted(info["traits"]["raw"].items()):
        lines.append(f"  {name}: raw={_fmt(raw)} normalized={_fmt(normalized.get(name))}")
    if info["contributions"]:
        lines.append("contributions:")
        for term in info["contributions"]:
            lines.append(f"  {term['trait']}: weight={_fmt(term['weight'])} contribution={_fmt(term['contribution'])}")
    lines.append(f"score: {_fmt(info['score'])}")
    if "estimated_gbhr" in info:
        lines.append(f"estimated_gbhr: {_fmt(info['estimated_gbhr'])}")
    sel = info["selection"]
    if sel["status"] == "selected":
        lines.append(f"selection: selected (priority {sel['priority']})")
    else:
        extra = f", remaining budget {_fmt(sel['remaining_budget_gbhr'])} GBHr" if "remaining_budget_gbhr" in sel else ""
        lines.append(f"selection: {sel['status']} ({sel['reason']}{extra})")
    return "\n".join(lines) + "\n"


def cmd_explain(args) -> int:
    cfg = load_config(args.config)
    snapshot = load_snapshot(args.snapshot, lenient=args.lenient)
    now = args.now if args.now is not None else snapshot.captured_at
    info = explain_candidate(run_pipeline(snapshot, cfg.engine, now), args.candidate)
    _emit(canonical_dumps(info) if args.json else explain_text(info).encode("utf-8"), None)
    return EXIT_OK


def summary_table(summaries: Sequence[dict]) -> str:
    header = ("strategy", "final_files", "final_small_files", "total_gbhr", "client_conflicts", "cluster_conflicts")
    rows = [header] + [
        tuple(f"{s[h]:.6f}" if isinstance(s[h], float) else str(s[h]) for h in header) for s in summaries
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def cmd_simulate(args) -> int:
    from lakecompact.simulator import compare_strategies, simulate

    cfg: CliConfig = load_config(args.config)
    if cfg.simulator is None:
        raise ConfigError("simulator: section required for simulate")
    if args.compare:
        results = compare_strategies(cfg.simulator, [None, *(cfg.strategies or (cfg.main_strategy(),))])
    else:
        settings = cfg.strategies[0] if cfg.strategies else cfg.main_strategy()
        res = simulate(replace(cfg.simulator, compaction=settings))
        results = {res.name: res}
    args.out.mkdir(parents=True, exist_ok=True)
    for name, res in results.items():
        (args.out / f"metrics-{name}.csv").write_text(res.to_csv(), encoding="utf-8", newline="\n")
        (args.out / f"events-{name}.jsonl").write_text(res.events_jsonl(), encoding="utf-8", newline="\n")
    sys.stdout.write(summary_table([r.summary() for r in results.values()]))
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "explain": cmd_explain, "simulate": cmd_simulate}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 2
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
