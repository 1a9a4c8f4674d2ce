"""Append-only seed store.

One JSONL file per API under the store root plus an index.json summary.
Records are deduplicated by content hash, so re-ingesting a corpus is a
no-op and ingest(export(store)) is a fixpoint.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

from .values import (
    SchemaError,
    Source,
    TestInput,
    canonical_json,
    content_id,
    params_from_list,
    params_to_list,
)


class UnknownApi(Exception):
    pass


@dataclass(frozen=True)
class TraceRecord:
    """One captured invocation, as stored on disk."""

    input: TestInput
    captured_at: str | None = None
    scope: str | None = None  # "developer" | "end-user" | None

    @property
    def api_name(self) -> str:
        return self.input.api_name

    @property
    def record_id(self) -> str:
        return self.input.record_id

    def to_dict(self) -> dict:
        out = {
            "api": self.input.api_name,
            "params": params_to_list(self.input.params),
            "source": self.input.source.value,
            "id": self.input.record_id,
        }
        if self.captured_at:
            out["ts"] = self.captured_at
        if self.scope:
            out["scope"] = self.scope
        return out

    @staticmethod
    def from_dict(data: dict, line: int | None = None) -> "TraceRecord":
        try:
            api = data.get("api")
            if not isinstance(api, str) or not api:
                raise SchemaError("record needs a non-empty api field")
            if "/" in api or "\\" in api:
                raise SchemaError(f"api name {api!r} contains a path separator")
            try:
                source = Source(data.get("source", "synthetic"))
            except ValueError:
                raise SchemaError(f"unknown source tag {data.get('source')!r}") from None
            params = params_from_list(data.get("params", []))
            scope = data.get("scope")
            if scope is not None and scope not in ("developer", "end-user"):
                raise SchemaError(f"unknown scope tag {scope!r}")
            ti = TestInput(api, params, source, content_id(api, params))
            return TraceRecord(ti, captured_at=data.get("ts"), scope=scope)
        except SchemaError as exc:
            if line is not None and exc.line is None:
                raise SchemaError(str(exc), line=line) from None
            raise


def make_record(input: TestInput, scope: str | None = None) -> TraceRecord:
    normalized = replace(input, record_id=content_id(input.api_name, input.params))
    return TraceRecord(normalized, scope=scope)


@dataclass(frozen=True)
class IngestSummary:
    added: int
    skipped: int


def _is_developer_name(api: str) -> bool:
    return any(part.startswith("_") for part in api.split("."))


class SeedStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cache: dict[str, list[TraceRecord]] = {}

    # -- paths ---------------------------------------------------------

    def _api_path(self, api: str) -> Path:
        return self.root / f"{api}.jsonl"

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    # -- reading ---------------------------------------------------------

    def _load_api(self, api: str) -> list[TraceRecord]:
        if api in self._cache:
            return self._cache[api]
        path = self._api_path(api)
        if not path.exists():
            raise UnknownApi(api)
        records = []
        with path.open() as fh:
            for n, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    data = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"bad JSON: {exc}", line=n) from None
                records.append(TraceRecord.from_dict(data, line=n))
        self._cache[api] = records
        return records

    def iter_records(self, api: str | None = None) -> Iterator[TraceRecord]:
        apis = [api] if api else self.list_apis()
        for name in apis:
            yield from self._load_api(name)

    def count(self, api: str) -> int:
        return len(self._load_api(api))

    def random_input(self, api: str, rng: random.Random) -> TestInput:
        """Uniform draw over the API's records; deterministic under a fixed rng."""
        records = self._load_api(api)
        if not records:
            raise UnknownApi(api)
        return records[rng.randrange(len(records))].input

    def list_apis(self, scope: str = "all") -> list[str]:
        index = self._load_index()
        names = sorted(index.get("apis", {}))
        if scope == "all":
            return names
        dev = set(index.get("developer", []))
        if scope == "developer":
            return [n for n in names if n in dev]
        if scope == "end_user":
            return [n for n in names if n not in dev]
        raise ValueError(f"unknown scope filter {scope!r}")

    # -- writing ---------------------------------------------------------

    def ingest(self, records: Iterable[TraceRecord]) -> IngestSummary:
        self.root.mkdir(parents=True, exist_ok=True)
        index = self._load_index()
        apis: dict[str, list[str]] = {k: list(v) for k, v in index.get("apis", {}).items()}
        developer = set(index.get("developer", []))
        sources: dict[str, int] = dict(index.get("sources", {}))

        added = skipped = 0
        handles: dict[str, list[str]] = {}
        seen: dict[str, set[str]] = {}
        for rec in records:
            api = rec.api_name
            if api not in seen:
                known = set(apis.get(api, []))
                if not known and self._api_path(api).exists():
                    known = {r.record_id for r in self._load_api(api)}
                seen[api] = known
            if rec.record_id in seen[api]:
                skipped += 1
                continue
            seen[api].add(rec.record_id)
            handles.setdefault(api, []).append(canonical_json(rec.to_dict()))
            apis.setdefault(api, []).append(rec.record_id)
            if rec.scope == "developer" or (rec.scope is None and _is_developer_name(api)):
                developer.add(api)
            sources[rec.input.source.value] = sources.get(rec.input.source.value, 0) + 1
            added += 1

        for api, lines in handles.items():
            with self._api_path(api).open("a") as fh:
                for line in lines:
                    fh.write(line + "\n")
            self._cache.pop(api, None)

        self._save_index({"apis": apis, "developer": sorted(developer), "sources": sources})
        return IngestSummary(added=added, skipped=skipped)

    def ingest_jsonl(
        self, lines: Iterable[str], source_override: Source | None = None
    ) -> IngestSummary:
        """Parse JSONL text and ingest; SchemaError carries the offending line."""
        records = []
        for n, raw in enumerate(lines, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                data = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"bad JSON: {exc}", line=n) from None
            rec = TraceRecord.from_dict(data, line=n)
            if source_override is not None:
                ti = replace(rec.input, source=source_override)
                rec = TraceRecord(ti, captured_at=rec.captured_at, scope=rec.scope)
            records.append(rec)
        return self.ingest(records)

    # -- index -----------------------------------------------------------

    def _load_index(self) -> dict:
        if not self._index_path.exists():
            return self.rebuild_index() if self.root.exists() else {"apis": {}, "developer": [], "sources": {}}
        with self._index_path.open() as fh:
            return json.load(fh)

    def _save_index(self, index: dict) -> None:
        self._index_path.write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")

    def rebuild_index(self) -> dict:
        """Rescan every per-API file; heals a missing or stale index."""
        apis: dict[str, list[str]] = {}
        developer: set[str] = set()
        sources: dict[str, int] = {}
        for path in sorted(self.root.glob("*.jsonl")):
            api = path.stem
            self._cache.pop(api, None)
            for rec in self._load_api(api):
                apis.setdefault(api, []).append(rec.record_id)
                if rec.scope == "developer" or (rec.scope is None and _is_developer_name(api)):
                    developer.add(api)
                sources[rec.input.source.value] = sources.get(rec.input.source.value, 0) + 1
        index = {"apis": apis, "developer": sorted(developer), "sources": sources}
        if self.root.exists():
            self._save_index(index)
        return index
