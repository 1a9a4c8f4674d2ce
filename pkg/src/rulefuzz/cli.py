"""Command line front end.

Subcommands: ingest, fuzz, rules, replay, classify-reports,
enumerate-apis. The ORION_WORKDIR environment variable supplies the
default script working directory for fuzz runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fuzzer, kb, rules, sim, store
from .values import SchemaError, Source

WORKDIR_ENV = "ORION_WORKDIR"


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise SchemaError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_config(args) -> fuzzer.CampaignConfig:
    data: dict = {}
    if os.environ.get(WORKDIR_ENV):
        data["work_dir"] = os.environ[WORKDIR_ENV]
    if args.config:
        data.update(json.loads(Path(args.config).read_text()))
    if getattr(args, "store", None):
        data["store_dir"] = args.store
    for item in args.set or []:
        key, value = _parse_override(item)
        data[key] = value
    return fuzzer.CampaignConfig.from_dict(data)


def _cmd_ingest(args) -> int:
    st = store.SeedStore(args.store)
    if args.sim_catalog:
        summary = st.ingest(sim.seed_catalog())
        print(f"ingested built-in catalog: {summary.added} added, {summary.skipped} duplicate")
        return 0
    if not args.files:
        print("nothing to ingest: pass JSONL files or --sim-catalog", file=sys.stderr)
        return 1
    override = Source(args.source) if args.source else None
    total_added = total_skipped = 0
    for name in args.files:
        lines = sys.stdin if name == "-" else Path(name).read_text().splitlines()
        try:
            summary = st.ingest_jsonl(lines, source_override=override)
        except SchemaError as exc:
            where = f"{name}:{exc.line}" if exc.line else name
            print(f"error: {where}: {exc}", file=sys.stderr)
            return 1
        total_added += summary.added
        total_skipped += summary.skipped
    print(f"ingested {total_added} records ({total_skipped} duplicate)")
    return 0


def _rule_table(report: fuzzer.CampaignReport) -> str:
    lines = [f"{'rule':<6} {'category':<8} {'finding cases':>13}"]
    for rule in rules.RULES:
        n = report.per_rule_counts.get(rule.id, 0)
        lines.append(f"{rule.id:<6} {rule.category:<8} {n:>13}")
    return "\n".join(lines)


def _cmd_fuzz(args) -> int:
    try:
        config = _load_config(args)
    except (OSError, json.JSONDecodeError, SchemaError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return fuzzer.EXIT_INIT_FAILURE
    try:
        report = fuzzer.run_campaign(config)
    except (fuzzer.CampaignInitError, store.UnknownApi, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return fuzzer.EXIT_INIT_FAILURE
    if args.report:
        report.write(args.report)
    print(
        f"{report.cases_executed} cases across {len(report.per_api_stats)} apis "
        f"in {report.wall_time_s:.2f}s; {len(report.findings)} unique findings"
    )
    print(_rule_table(report))
    for f in report.findings:
        rule_part = ",".join(f.rule_attribution) or "passthrough"
        print(f"  {f.fingerprint}  {f.api_name}  {f.verdict.kind}"
              f"  [{f.verdict.detail or '-'}]  via {rule_part}  x{f.count}")
    return report.exit_code


def _cmd_rules(args) -> int:
    entries = rules.catalog()
    if args.category:
        entries = [e for e in entries if e["category"] == args.category]
    print(json.dumps(entries, indent=1))
    return 0


def _cmd_replay(args) -> int:
    report = json.loads(Path(args.report).read_text())
    try:
        stored, replayed = fuzzer.replay_case(report, args.case_id)
    except fuzzer.UnknownCase:
        print(f"error: case {args.case_id} not in report", file=sys.stderr)
        return 1
    match = stored == replayed
    print(f"stored:   {stored.kind} [{stored.detail or '-'}]")
    print(f"replayed: {replayed.kind} [{replayed.detail or '-'}]")
    print("reproduced" if match else "DID NOT reproduce")
    return 0 if match else 1


def _cmd_classify(args) -> int:
    raw = json.loads(Path(args.reports).read_text())
    reports = [kb.ReportRecord.from_dict(r) for r in raw]
    taxonomy = kb.load_taxonomy(args.taxonomy) if args.taxonomy else kb.DEFAULT_TAXONOMY
    kept, dropped = kb.filter_reports(reports)
    out = {
        "kept": [r.id for r in kept],
        "dropped": dropped,
        "categories": {r.id: sorted(kb.classify(r, taxonomy)) for r in kept},
    }
    if args.annotations:
        annotations = kb.load_annotations(args.annotations)
        rule_map = (
            json.loads(Path(args.rule_map).read_text())
            if args.rule_map
            else kb.DEFAULT_ROOT_CAUSE_RULES
        )
        out["rule_provenance"] = kb.provenance_table(kept, annotations, rule_map)
    print(json.dumps(out, indent=1))
    return 0


def _cmd_enumerate(args) -> int:
    try:
        from apihooks import devapi
    except ImportError:
        print(
            "error: the apihooks package is not installed; "
            "developer API enumeration lives there",
            file=sys.stderr,
        )
        return 1
    report = devapi.enumerate_package(args.package)
    print(json.dumps(report.to_dict(), indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulefuzz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="add JSONL trace records to a seed store")
    p.add_argument("files", nargs="*", help="JSONL files ('-' for stdin)")
    p.add_argument("--store", default="store", help="seed store directory")
    p.add_argument("--source", choices=[s.value for s in Source], help="override source tag")
    p.add_argument("--sim-catalog", action="store_true", help="ingest the built-in simulated seed corpus")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("fuzz", help="run a campaign")
    p.add_argument("--config", help="campaign config JSON file")
    p.add_argument("--store", help="seed store directory (overrides config)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, value parsed as JSON")
    p.add_argument("--report", help="write the full report JSON here")
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("rules", help="print the mutation rule catalog")
    p.add_argument("--category", choices=(rules.GUIDED, rules.CORNER))
    p.set_defaults(func=_cmd_rules)

    p = sub.add_parser("replay", help="re-execute one finding from a report")
    p.add_argument("--report", required=True, help="report JSON from fuzz")
    p.add_argument("case_id")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("classify-reports", help="categorize and filter bug report records")
    p.add_argument("reports", help="JSON array of report records")
    p.add_argument("--taxonomy", help="keyword taxonomy JSON (default: built-in)")
    p.add_argument("--annotations", help="root-cause annotation JSON for rule provenance")
    p.add_argument("--rule-map", help="root-cause to rule-id map JSON (default: built-in)")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("enumerate-apis", help="list internal developer APIs of a package (needs apihooks)")
    p.add_argument("package")
    p.set_defaults(func=_cmd_enumerate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
