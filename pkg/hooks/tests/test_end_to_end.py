"""Release gate for the hooks package: the harvest-to-ingest loop and
the rendered-script execution path, both against the mock target.

Each test prints one `[ACCEPT] <gate>: PASS|FAIL` line, same scrapeable
convention as the fuzzer's own gate. The fuzzer side is driven strictly
through its public surfaces: the seed-store JSONL format, the CLI, the
script renderer, and the scripted backend pointed at our runner shim.
"""

import json
import sys

import mockdl
from mockdl import exercise

from apihooks import devapi, instrument

from rulefuzz import cli as rulefuzz_cli
from rulefuzz import codegen, executor
from rulefuzz.fuzzer import passthrough_case
from rulefuzz.store import SeedStore
from rulefuzz.values import DType, Fill, ParamValue, TensorValue, TestInput, content_id


def gate(name, ok, detail=""):
    print(f"\n[ACCEPT] {name}: {'PASS' if ok else 'FAIL'}{' ' + detail if detail else ''}")
    assert ok, detail


def test_harvested_seeds_cover_every_public_api_and_ingest_cleanly(tmp_path, capsys):
    out = tmp_path / "seeds.jsonl"
    with instrument("mockdl", out) as hooks:
        exercise.main()

    recorded_apis = {r["api"] for r in hooks.records}
    expected = {f"mockdl.{name}" for name in mockdl.__all__}
    missing = expected - recorded_apis

    # ingest through the CLI, the same door an operator uses
    store_dir = tmp_path / "store"
    with capsys.disabled():
        code = rulefuzz_cli.main(["ingest", "--store", str(store_dir), str(out)])
    store = SeedStore(store_dir)
    stored = sum(store.count(api) for api in store.list_apis())
    unique = len({r["id"] for r in hooks.records})

    report = devapi.enumerate_package("mockdl")
    grouping = {m: len(es) for m, es in report.by_module().items()}

    gate(
        "instrumented exercise seeds every public API",
        hooks.records and not missing and hooks.skipped == 0,
        f"recorded {len(hooks.records)} calls over {len(recorded_apis)} APIs, missing {sorted(missing)}",
    )
    gate(
        "harvested records ingest with zero schema errors",
        code == 0 and stored == unique,
        f"ingest exit {code}, {stored} stored of {unique} unique",
    )
    gate(
        "developer-API enumeration matches the mock tree",
        report.count == 6 and grouping == {"mockdl._internal.ops": 3, "mockdl._internal.util": 3} and not report.errors,
        f"count {report.count}, modules {grouping}, errors {list(report.errors)}",
    )


def _tensor(name, pos, shape=(4, 3), fill=1.5):
    return ParamValue.tensor(name, pos, TensorValue(Fill.const(fill), shape, DType.FLOAT32))


def _case(api, params):
    ti = TestInput(api, tuple(params), record_id=content_id(api, params))
    return passthrough_case(api, ti, 1, ("cpu",))


SCRIPTED_CASES = {
    "benign": _case("mockdl.scale", [_tensor("t", 0), ParamValue.real("factor", 1, 2.0)]),
    "segv": _case(
        "mockdl.lookup",
        [_tensor("table", 0), ParamValue.list_("indices", 1, [ParamValue.integer("", 0, 9)])],
    ),
    "invalid": _case("mockdl.scale", [_tensor("t", 0), ParamValue.real("factor", 1, float("nan"))]),
    "rterror": _case(
        "mockdl.concat",
        [ParamValue.list_("parts", 0, [_tensor("", 0), _tensor("", 1, shape=(2, 5))])],
    ),
    "abort": _case("mockdl.pad", [_tensor("t", 0), ParamValue.integer("amount", 1, 2**62)]),
}


def test_scripted_path_reproduces_the_verdict_spectrum(tmp_path):
    profile = codegen.python_profile("mockdl")
    backend = executor.ScriptedBackend(
        runner=[sys.executable, "-m", "apihooks.runner"],
        work_dir=tmp_path / "work",
        timeout_s=30,
    )
    verdicts = {}
    outcomes = {}
    for name, case in SCRIPTED_CASES.items():
        rendered = codegen.render(case, profile, "cpu")
        outcome = backend.run(case, rendered, "cpu")
        outcomes[name] = outcome
        verdicts[name] = executor.classify(outcome, profile)

    kinds = {v.kind for v in verdicts.values()}
    rows = {name: (v.kind, v.detail) for name, v in verdicts.items()}

    signal_crash = verdicts["segv"].kind == "crash" and verdicts["segv"].detail == "SIGSEGV"
    true_signal = outcomes["segv"].signal is not None  # the child really died by signal
    filtered = verdicts["invalid"].kind == "invalid-input" and verdicts["invalid"].detail == "ValueError"

    gate(
        "scripted path reproduces >= 3 verdict classes",
        len(kinds) >= 3,
        f"classes {sorted(kinds)} from {rows}",
    )
    gate(
        "spectrum includes a signal-terminated crash and a filtered rejection",
        signal_crash and true_signal and filtered,
        f"segv -> {rows['segv']} (signal {outcomes['segv'].signal}), invalid -> {rows['invalid']}",
    )
    gate(
        "benign, abort, and leaked-error cases classify individually",
        rows["benign"] == ("benign", "")
        and rows["abort"] == ("crash", "SIGABRT")
        and rows["rterror"] == ("crash", "runtime-error:RuntimeError"),
        f"{rows}",
    )
