"""Campaign driver.

Walks the seed store, applies every enabled rule to every parameter it
fits (one rule per generated case, so a finding attributes cleanly),
executes across the configured devices, and folds verdicts into
deduplicated findings keyed by fingerprint. Every random choice derives
from (master seed, api, iteration, rule, slot), so a config replays to
the same fingerprint set byte for byte.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import codegen, executor, rules, sim
from .rng import derive_seed, make_rng
from .store import SeedStore
from .values import (
    CornerConfig,
    ParamValue,
    SchemaError,
    TestInput,
    params_from_list,
    params_to_list,
)

EXIT_OK = 0
EXIT_INIT_FAILURE = 1
EXIT_FINDINGS = 2


class CampaignInitError(Exception):
    pass


class UnknownCase(Exception):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    store_dir: str = "store"
    apis: tuple[str, ...] = ()  # names or fnmatch patterns; empty = every stored api
    api_scope: str = "all"  # all | end_user | developer
    num_iter: int = 1000
    rules: tuple[str, ...] | None = None  # None = full catalog; () = pass-through baseline
    corner: CornerConfig = CornerConfig()
    timeout_s: float = 30.0
    workers: int = 1
    backend: str = "simulated"  # simulated | scripted
    devices: tuple[str, ...] = ("A", "B")
    runner: tuple[str, ...] = ()  # scripted: process prefix, default python
    target_module: str = "mockdl"  # scripted: module the profile imports
    filtered_exceptions: tuple[str, ...] = codegen.DEFAULT_FILTERED_EXCEPTIONS
    work_dir: str = "work"
    keep_artifacts: bool = False
    tol_rel: float = 1e-6
    tol_abs: float = 1e-9
    master_seed: int = 1
    sim_bugs: tuple[str, ...] | None = None  # None = full planted catalog

    def __post_init__(self):
        if self.num_iter < 1:
            raise SchemaError("num_iter must be >= 1")
        if self.backend not in ("simulated", "scripted"):
            raise SchemaError(f"unknown backend {self.backend!r}")
        if not self.devices:
            raise SchemaError("at least one device is required")
        if self.rules is not None:
            unknown = set(self.rules) - set(rules.RULES_BY_ID)
            if unknown:
                raise SchemaError(f"unknown rule ids: {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "store_dir": self.store_dir,
            "apis": list(self.apis),
            "api_scope": self.api_scope,
            "num_iter": self.num_iter,
            "rules": list(self.rules) if self.rules is not None else None,
            "corner": self.corner.to_dict(),
            "timeout_s": self.timeout_s,
            "workers": self.workers,
            "backend": self.backend,
            "devices": list(self.devices),
            "runner": list(self.runner),
            "target_module": self.target_module,
            "filtered_exceptions": list(self.filtered_exceptions),
            "work_dir": self.work_dir,
            "keep_artifacts": self.keep_artifacts,
            "tol_rel": self.tol_rel,
            "tol_abs": self.tol_abs,
            "master_seed": self.master_seed,
            "sim_bugs": list(self.sim_bugs) if self.sim_bugs is not None else None,
        }

    @staticmethod
    def from_dict(data: dict) -> "CampaignConfig":
        defaults = CampaignConfig()
        known = defaults.to_dict()
        unknown = set(data) - set(known)
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        merged = {**known, **data}
        corner = merged["corner"]
        return CampaignConfig(
            store_dir=merged["store_dir"],
            apis=tuple(merged["apis"]),
            api_scope=merged["api_scope"],
            num_iter=int(merged["num_iter"]),
            rules=tuple(merged["rules"]) if merged["rules"] is not None else None,
            corner=corner if isinstance(corner, CornerConfig) else CornerConfig.from_dict(corner),
            timeout_s=float(merged["timeout_s"]),
            workers=int(merged["workers"]),
            backend=merged["backend"],
            devices=tuple(merged["devices"]),
            runner=tuple(merged["runner"]),
            target_module=merged["target_module"],
            filtered_exceptions=tuple(merged["filtered_exceptions"]),
            work_dir=merged["work_dir"],
            keep_artifacts=bool(merged["keep_artifacts"]),
            tol_rel=float(merged["tol_rel"]),
            tol_abs=float(merged["tol_abs"]),
            master_seed=int(merged["master_seed"]),
            sim_bugs=tuple(merged["sim_bugs"]) if merged["sim_bugs"] is not None else None,
        )


@dataclass(frozen=True)
class GeneratedCase:
    """One mutated invocation plus everything needed to regenerate it."""

    case_id: str
    api_name: str
    seed_record_id: str
    input: TestInput
    notes: tuple[rules.MutationNote, ...]
    devices: tuple[str, ...] = ()

    def rule_ids(self) -> tuple[str, ...]:
        return tuple(n.rule_id for n in self.notes)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "api": self.api_name,
            "seed_record_id": self.seed_record_id,
            "params": params_to_list(self.input.params),
            "source": self.input.source.value,
            "notes": [n.to_dict() for n in self.notes],
            "devices": list(self.devices),
        }

    @staticmethod
    def from_dict(data: dict) -> "GeneratedCase":
        from .values import Source

        params = params_from_list(data["params"])
        ti = TestInput(data["api"], params, Source(data.get("source", "synthetic")), data["seed_record_id"])
        return GeneratedCase(
            case_id=data["case_id"],
            api_name=data["api"],
            seed_record_id=data["seed_record_id"],
            input=ti,
            notes=tuple(rules.MutationNote.from_dict(n) for n in data.get("notes", [])),
            devices=tuple(data.get("devices", ())),
        )


def _case_id(api: str, seed_id: str, trace: str, rng_seed: int) -> str:
    body = "|".join([api, seed_id, trace, str(rng_seed)])
    return hashlib.sha256(body.encode()).hexdigest()[:16]


def fuzz_iteration(
    api_name: str,
    seed: TestInput,
    base_seed: int,
    enabled: Sequence[str] | None = None,
    config: CornerConfig = CornerConfig(),
    devices: tuple[str, ...] = (),
) -> list[GeneratedCase]:
    """All single-rule cases for one seed: for each parameter, each
    applicable rule fires exactly once (pairwise rules consume the anchor
    and its partner). Deterministic in base_seed."""
    enabled_set = set(enabled) if enabled is not None else None
    cases: list[GeneratedCase] = []
    params = seed.params
    for j, p in enumerate(params):
        for rule in rules.TABLE.get(p.kind, ()):
            if enabled_set is not None and rule.id not in enabled_set:
                continue
            if not rule.anchor_ok(p):
                continue
            if rule.arity == 2:
                k = rules.find_partner(params, j, rule)
                if k is None:
                    continue
                idx = (j, k)
            else:
                idx = (j,)
            case_seed = derive_seed(base_seed, rule.id, j)
            rng = make_rng(base_seed, rule.id, j, "draw")
            try:
                new_params, note = rule.apply(params, idx, rng, config, case_seed)
            except rules.NotApplicable:
                continue
            mutated = replace(seed, params=new_params)
            cid = _case_id(api_name, seed.record_id, f"{rule.id}@{j}", case_seed)
            cases.append(GeneratedCase(cid, api_name, seed.record_id, mutated, (note,), devices))
    return cases


def passthrough_case(api_name: str, seed: TestInput, base_seed: int, devices: tuple[str, ...]) -> GeneratedCase:
    cid = _case_id(api_name, seed.record_id, "passthrough", base_seed)
    return GeneratedCase(cid, api_name, seed.record_id, seed, (), devices)


def fingerprint(api: str, verdict: executor.Verdict, frame: str = "") -> str:
    body = "|".join([api, verdict.kind, verdict.detail, frame])
    return hashlib.sha256(body.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Finding:
    fingerprint: str
    api_name: str
    verdict: executor.Verdict
    rule_attribution: tuple[str, ...]
    case: GeneratedCase
    count: int = 1

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "api": self.api_name,
            "verdict": self.verdict.to_dict(),
            "rules": list(self.rule_attribution),
            "count": self.count,
            "case": self.case.to_dict(),
        }


@dataclass
class CampaignReport:
    config: CampaignConfig
    findings: list[Finding]
    per_rule_counts: dict[str, int]
    per_api_stats: dict[str, dict]
    wall_time_s: float
    cases_executed: int

    @property
    def exit_code(self) -> int:
        return EXIT_FINDINGS if self.findings else EXIT_OK

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "findings": [f.to_dict() for f in self.findings],
            "per_rule_counts": dict(sorted(self.per_rule_counts.items())),
            "per_api_stats": {k: dict(v) for k, v in sorted(self.per_api_stats.items())},
            "wall_time_s": self.wall_time_s,
            "cases_executed": self.cases_executed,
        }

    def write(self, path: str | Path) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(self.to_dict(), indent=1) + "\n")
        return p


def _select_apis(store: SeedStore, config: CampaignConfig) -> list[str]:
    names = store.list_apis(scope=config.api_scope)
    if not config.apis:
        return names
    picked = []
    for name in names:
        if any(fnmatch.fnmatch(name, pat) or name == pat for pat in config.apis):
            picked.append(name)
    return picked


def _build_backend(config: CampaignConfig):
    if config.backend == "simulated":
        target = sim.SimTarget.default(config.sim_bugs)
        return executor.SimulatedBackend(target, timeout_s=config.timeout_s)
    try:
        return executor.ScriptedBackend(
            runner=config.runner or None,
            work_dir=config.work_dir,
            timeout_s=config.timeout_s,
            keep_artifacts=config.keep_artifacts,
        )
    except executor.BackendError as exc:
        raise CampaignInitError(str(exc)) from None


def _profile(config: CampaignConfig) -> codegen.TargetProfile:
    return codegen.python_profile(config.target_module, filtered=config.filtered_exceptions)


@dataclass(frozen=True)
class CaseResolution:
    case: GeneratedCase
    verdict: executor.Verdict
    frame: str


def _resolve_case(case: GeneratedCase, backend, profile, config: CampaignConfig) -> CaseResolution:
    """Execute one case on every device and fold to a single verdict."""
    outcomes = []
    for device in case.devices:
        rendered = codegen.render(case, profile, device) if config.backend == "scripted" else None
        try:
            outcome = backend.run(case, rendered, device)
        except executor.BackendError as exc:
            return CaseResolution(case, executor.Verdict(executor.V_INFRA_ERROR, detail=str(exc)), "")
        verdict = executor.classify(outcome, profile)
        if verdict.kind not in (executor.V_BENIGN,):
            return CaseResolution(case, verdict, executor.top_frame(outcome.stderr))
        outcomes.append(outcome)
    if len(outcomes) == 2:
        try:
            verdict = executor.differential(outcomes[0], outcomes[1], config.tol_rel, config.tol_abs)
        except executor.IncomparableOutputs as exc:
            return CaseResolution(case, executor.Verdict(executor.V_INFRA_ERROR, detail=str(exc)), "")
        if verdict.kind == executor.V_DIFF_MISMATCH:
            return CaseResolution(case, verdict, "")
    return CaseResolution(case, executor.Verdict(executor.V_BENIGN), "")


def run_campaign(config: CampaignConfig) -> CampaignReport:
    start = time.monotonic()
    store = SeedStore(config.store_dir)
    try:
        apis = _select_apis(store, config)
    except (OSError, SchemaError) as exc:
        raise CampaignInitError(f"cannot read store: {exc}") from None
    if not apis:
        raise CampaignInitError(
            f"no apis to fuzz: store {config.store_dir!r} matched nothing"
        )
    backend = _build_backend(config)
    profile = _profile(config)

    findings: dict[str, Finding] = {}
    per_rule: dict[str, int] = {}
    per_api: dict[str, dict] = {}
    cases_executed = 0

    def handle(res: CaseResolution):
        nonlocal cases_executed
        cases_executed += 1
        api = res.case.api_name
        stats = per_api.setdefault(api, {"cases": 0, "findings": 0, "unique_fingerprints": 0})
        stats["cases"] += 1
        if res.verdict.kind not in executor.FINDING_VERDICTS:
            return
        stats["findings"] += 1
        for rid in res.case.rule_ids():
            per_rule[rid] = per_rule.get(rid, 0) + 1
        fp = fingerprint(api, res.verdict, res.frame)
        if fp in findings:
            old = findings[fp]
            findings[fp] = replace(old, count=old.count + 1)
        else:
            findings[fp] = Finding(fp, api, res.verdict, res.case.rule_ids(), res.case)
            stats["unique_fingerprints"] += 1

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for api in apis:
            for iteration in range(config.num_iter):
                seed = store.random_input(api, make_rng(config.master_seed, api, iteration, "fetch"))
                base_seed = derive_seed(config.master_seed, api, iteration)
                cases = fuzz_iteration(
                    api, seed, base_seed,
                    enabled=config.rules, config=config.corner, devices=config.devices,
                )
                if not cases:
                    cases = [passthrough_case(api, seed, base_seed, config.devices)]
                if pool is None:
                    for case in cases:
                        handle(_resolve_case(case, backend, profile, config))
                else:
                    for res in pool.map(
                        lambda c: _resolve_case(c, backend, profile, config), cases
                    ):
                        handle(res)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    ordered = sorted(findings.values(), key=lambda f: (f.api_name, f.fingerprint))
    return CampaignReport(
        config=config,
        findings=ordered,
        per_rule_counts=per_rule,
        per_api_stats=per_api,
        wall_time_s=time.monotonic() - start,
        cases_executed=cases_executed,
    )


# --- replay ---------------------------------------------------------------------


def replay_case(report: dict, case_id: str) -> tuple[executor.Verdict, executor.Verdict]:
    """Re-execute one reported case under the report's own config echo.

    Returns (stored verdict, replayed verdict); equality means the finding
    reproduces.
    """
    config = CampaignConfig.from_dict(report["config"])
    entry = None
    for f in report.get("findings", []):
        if f["case"]["case_id"] == case_id:
            entry = f
            break
    if entry is None:
        raise UnknownCase(case_id)
    case = GeneratedCase.from_dict(entry["case"])
    backend = _build_backend(config)
    profile = _profile(config)
    res = _resolve_case(case, backend, profile, config)
    return executor.Verdict.from_dict(entry["verdict"]), res.verdict


# --- reachability search -----------------------------------------------------------


def reachability_witnesses(
    target: sim.SimTarget, trials: int = 200
) -> dict[str, dict]:
    """Brute-force proof that every planted bug is one rule away from a
    shipped seed: enumerate seeds x rules x trial seeds until each bug's
    trigger fires on a generated case. Divergence bugs count as reached
    when their trigger holds (the differential oracle does the rest)."""
    seeds = sim.seed_catalog()
    witnesses: dict[str, dict] = {}
    for bug in target.bugs():
        found = None
        for rec in seeds:
            if rec.api_name != bug.api_name or found:
                continue
            for trial in range(trials):
                if found:
                    break
                for case in fuzz_iteration(rec.api_name, rec.input, derive_seed("reach", trial)):
                    if bug.trigger(case.input.params):
                        found = {
                            "bug": bug.bug_id,
                            "rule": case.notes[0].rule_id if case.notes else None,
                            "seed_record": rec.record_id,
                            "trial": trial,
                            "case_id": case.case_id,
                        }
                        break
        if found:
            witnesses[bug.bug_id] = found
    return witnesses
