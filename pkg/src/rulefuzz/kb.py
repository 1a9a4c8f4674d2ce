"""Vulnerability-report triage.

Keyword classification of historical bug reports into coarse categories,
exclusion filtering of reports the fuzzer cannot act on, and a provenance
table linking manually annotated root causes to mutation rules. Keyword
matching is deliberately dumb: case-insensitive substring over normalized
text, so the classified set is reproducible from the taxonomy alone.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping


class AnnotationMissing(Exception):
    pass


DEFAULT_TAXONOMY: dict[str, tuple[str, ...]] = {
    "memory": (
        "buffer overflow",
        "integer overflow",
        "integer underflow",
        "heap buffer overflow",
        "stack overflow",
        "null pointer dereference",
    ),
    "logical": (
        "wrong result",
        "unexpected output",
        "incorrect calculation",
        "inconsistent behavior",
        "unexpected behavior",
        "incorrect logic",
        "wrong calculation",
    ),
    "performance": (
        "slow",
        "high cpu usage",
        "high memory usage",
        "poor performance",
        "slow response time",
        "performance bottleneck",
        "performance optimization",
        "resource usage",
        "race condition",
        "memory leak",
    ),
}

EXCLUDED_PLATFORMS = ("windows", "android", "ios")
EXCLUDED_BUILD_LABELS = ("build", "configuration", "config")
EXCLUDED_EXTERNAL_LIBS = ("torchvision", "torchaudio")
NO_INPUT_FLAG = "no-input"

_WS = re.compile(r"\s+")


def _normalize(text: str) -> str:
    return _WS.sub(" ", text.lower()).strip()


@dataclass(frozen=True)
class ReportRecord:
    id: str
    title: str
    body: str = ""
    labels: tuple[str, ...] = ()
    platform_tags: tuple[str, ...] = ()

    @staticmethod
    def from_dict(data: dict) -> "ReportRecord":
        return ReportRecord(
            id=str(data["id"]),
            title=data.get("title", ""),
            body=data.get("body", ""),
            labels=tuple(data.get("labels", ())),
            platform_tags=tuple(data.get("platform_tags", ())),
        )


def load_taxonomy(path: str | Path | None) -> dict[str, tuple[str, ...]]:
    if path is None:
        return dict(DEFAULT_TAXONOMY)
    data = json.loads(Path(path).read_text())
    return {cat: tuple(words) for cat, words in data.items()}


def classify(report: ReportRecord, taxonomy: Mapping[str, Iterable[str]] | None = None) -> set[str]:
    """Categories whose keyword list hits the report's title or body."""
    taxonomy = taxonomy if taxonomy is not None else DEFAULT_TAXONOMY
    text = _normalize(report.title + " " + report.body)
    hits = set()
    for category, keywords in taxonomy.items():
        for keyword in keywords:
            if _normalize(keyword) in text:
                hits.add(category)
                break
    return hits


@dataclass(frozen=True)
class ExclusionDecision:
    keep: bool
    reason: str | None = None


@dataclass(frozen=True)
class ExclusionRules:
    platforms: tuple[str, ...] = EXCLUDED_PLATFORMS
    build_labels: tuple[str, ...] = EXCLUDED_BUILD_LABELS
    external_libs: tuple[str, ...] = EXCLUDED_EXTERNAL_LIBS
    no_input_flag: str = NO_INPUT_FLAG


def apply_exclusions(report: ReportRecord, rules: ExclusionRules = ExclusionRules()) -> ExclusionDecision:
    """Drop reports the fuzzer cannot reproduce from API inputs alone."""
    tags = {_normalize(t) for t in report.platform_tags} | {_normalize(l) for l in report.labels}
    for platform in rules.platforms:
        if platform in tags:
            return ExclusionDecision(False, "platform")
    for label in rules.build_labels:
        if label in tags:
            return ExclusionDecision(False, "build-config")
    for lib in rules.external_libs:
        if lib in tags:
            return ExclusionDecision(False, "external-library")
    if _normalize(rules.no_input_flag) in tags:
        return ExclusionDecision(False, "no-input")
    return ExclusionDecision(True)


def filter_reports(
    reports: Iterable[ReportRecord], rules: ExclusionRules = ExclusionRules()
) -> tuple[list[ReportRecord], dict[str, list[str]]]:
    kept: list[ReportRecord] = []
    dropped: dict[str, list[str]] = {}
    for report in reports:
        decision = apply_exclusions(report, rules)
        if decision.keep:
            kept.append(report)
        else:
            dropped.setdefault(decision.reason or "unknown", []).append(report.id)
    return kept, dropped


# Root causes are assigned by hand in an annotation file; this mapping turns
# an annotated cause into the rule that targets it. Shipped as data so a new
# study can re-map without touching code.
DEFAULT_ROOT_CAUSE_RULES: dict[str, str] = {
    "shape-mismatch": "R1",
    "dim-mismatch": "R2",
    "list-indices-mismatch": "R3",
    "list-element-mismatch": "R4",
    "list-length-mismatch": "R5",
    "value-corner": "R6",
    "shape-corner-first": "R7",
    "shape-corner-last": "R8",
    "scalar-tensor": "R9",
    "non-scalar-tensor": "R10",
    "numeric-corner": "R11",
    "bool-corner": "R12",
    "string-corner": "R13",
    "list-corner": "R14",
}


def load_annotations(path: str | Path) -> dict[str, str]:
    p = Path(path)
    if not p.exists():
        raise AnnotationMissing(f"annotation file not found: {p}")
    data = json.loads(p.read_text())
    return {str(k): str(v) for k, v in data.items()}


def provenance_table(
    reports: Iterable[ReportRecord],
    annotations: Mapping[str, str],
    rule_map: Mapping[str, str] | None = None,
) -> dict[str, list[str]]:
    """Map rule id -> report ids whose annotated root cause it targets.

    Reports without an annotation, or with a cause outside the map, land
    under "unmapped" so nothing silently disappears.
    """
    rule_map = rule_map if rule_map is not None else DEFAULT_ROOT_CAUSE_RULES
    table: dict[str, list[str]] = {}
    for report in reports:
        cause = annotations.get(report.id)
        rule = rule_map.get(cause) if cause else None
        table.setdefault(rule or "unmapped", []).append(report.id)
    return table
