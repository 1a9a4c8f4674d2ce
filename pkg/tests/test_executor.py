import json
import math
import signal
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulefuzz import codegen, executor, sim
from rulefuzz.codegen import OUT_BEGIN, OUT_END, VERDICT_OK, OutputSummary
from rulefuzz.executor import (
    BackendError,
    ExecutionOutcome,
    IncomparableOutputs,
    ScriptedBackend,
    SimulatedBackend,
    Verdict,
    classify,
    differential,
    top_frame,
)
from rulefuzz.fuzzer import GeneratedCase
from rulefuzz.values import DType, Fill, ParamValue, Source, TensorValue, TestInput

PROFILE = codegen.python_profile("mockdl")


def outcome(stdout="", stderr="", exit_code=0, sig=None, timed_out=False):
    return ExecutionOutcome(
        case_id="c1",
        device="cpu",
        exit_code=exit_code,
        signal=sig,
        timed_out=timed_out,
        stdout=stdout,
        stderr=stderr,
    )


def case_for(params, api="sim.op", cid="feed0123"):
    ti = TestInput(api, tuple(params), Source.SYNTHETIC, "seed1")
    return GeneratedCase(cid, api, "seed1", ti, (), ("cpu",))


def tensor(name, pos, shape, fill=1.0):
    return ParamValue.tensor(name, pos, TensorValue(Fill.const(fill), shape, DType.FLOAT32))


class TestClassify:
    """The full termination-state table, one row per test."""

    def test_signal_segv_is_crash(self):
        v = classify(outcome(sig=signal.SIGSEGV, exit_code=None))
        assert v == Verdict("crash", "SIGSEGV")

    def test_signal_abrt_is_crash(self):
        v = classify(outcome(sig=signal.SIGABRT, exit_code=None))
        assert v == Verdict("crash", "SIGABRT")

    def test_timeout_is_hang(self):
        v = classify(outcome(timed_out=True, exit_code=None))
        assert v.kind == "hang"

    def test_filtered_exception_is_invalid_input(self):
        v = classify(outcome(stdout="ORION::EXC:ValueError\n"), PROFILE)
        assert v == Verdict("invalid-input", "ValueError")

    def test_second_filtered_name(self):
        v = classify(outcome(stdout="ORION::EXC:InvalidArgumentError\n"), PROFILE)
        assert v.kind == "invalid-input"

    def test_unfiltered_exception_is_runtime_crash(self):
        v = classify(outcome(stdout="ORION::EXC:RuntimeError\n"), PROFILE)
        assert v == Verdict("crash", "runtime-error:RuntimeError")

    def test_ok_marker_clean_exit_is_benign(self):
        assert classify(outcome(stdout="ORION::OK\n")).kind == "benign"

    def test_nonzero_exit_is_crash(self):
        v = classify(outcome(stdout="ORION::OK\n", exit_code=3))
        assert v == Verdict("crash", "exit:3")

    def test_clean_exit_without_marker_is_crash(self):
        v = classify(outcome(stdout="all quiet"))
        assert v == Verdict("crash", "no-marker")

    def test_signal_outranks_marker(self):
        # stdout may carry a stale OK from before the fault
        v = classify(outcome(stdout="ORION::OK\n", sig=signal.SIGSEGV, exit_code=None))
        assert v == Verdict("crash", "SIGSEGV")

    def test_timeout_outranks_marker(self):
        v = classify(outcome(stdout="ORION::OK\n", timed_out=True, exit_code=None))
        assert v.kind == "hang"

    def test_default_profile_filters_valueerror(self):
        assert classify(outcome(stdout="ORION::EXC:ValueError\n")).kind == "invalid-input"

    def test_custom_filter_widens_invalid_input(self):
        profile = codegen.python_profile("m", filtered=("TypeError",))
        v = classify(outcome(stdout="ORION::EXC:TypeError\n"), profile)
        assert v.kind == "invalid-input"
        # and the defaults are gone from that profile
        v2 = classify(outcome(stdout="ORION::EXC:ValueError\n"), profile)
        assert v2.kind == "crash"

    def test_unnamed_signal_number(self):
        v = classify(outcome(sig=64, exit_code=None))
        assert v.kind == "crash" and v.detail in ("SIGRTMAX", "SIG64")

    def test_finding_verdicts_frozen(self):
        assert executor.FINDING_VERDICTS == ("crash", "hang", "diff-mismatch")
        assert "invalid-input" not in executor.FINDING_VERDICTS


class TestOutcomeValidation:
    def test_signal_plus_exit_code_conflict(self):
        with pytest.raises(ValueError):
            outcome(sig=signal.SIGSEGV, exit_code=0)

    def test_signal_plus_timeout_conflict(self):
        with pytest.raises(ValueError):
            outcome(sig=signal.SIGSEGV, timed_out=True, exit_code=None)

    def test_no_termination_cause_at_all(self):
        with pytest.raises(ValueError):
            outcome(exit_code=None)

    def test_roundtrip_dict(self):
        o = outcome(stdout="ORION::OK\n")
        d = o.to_dict()
        assert d["exit_code"] == 0 and d["signal"] is None


def benign_outcome(values, shape=(2, 2), dtype="float32", checksum=None, device="A"):
    if checksum is None:
        checksum = math.fsum(v for v in values if not math.isnan(v))
    s = OutputSummary(tuple(shape), dtype, tuple(values), checksum)
    body = "\n".join([VERDICT_OK, OUT_BEGIN, json.dumps(s.to_dict()), OUT_END, ""])
    return ExecutionOutcome(case_id="c1", device=device, exit_code=0, stdout=body)


class TestDifferential:
    def test_identical_is_benign(self):
        a = benign_outcome([1.0, 2.0, 3.0, 4.0])
        b = benign_outcome([1.0, 2.0, 3.0, 4.0], device="B")
        assert differential(a, b).kind == "benign"

    def test_shape_mismatch_is_infinite(self):
        r = differential(benign_outcome([1.0], shape=(1,)),
                         benign_outcome([1.0], shape=(1, 1), device="B"))
        assert r.kind == "diff-mismatch"
        assert r.delta == math.inf and r.detail == "shape"

    def test_dtype_mismatch_is_infinite(self):
        r = differential(benign_outcome([1.0], shape=(1,)),
                         benign_outcome([1.0], shape=(1,), dtype="float64", device="B"))
        assert r.kind == "diff-mismatch" and r.delta == math.inf

    def test_length_mismatch_is_infinite(self):
        r = differential(benign_outcome([1.0, 2.0], shape=(2,)),
                         benign_outcome([1.0], shape=(2,), device="B"))
        assert r.kind == "diff-mismatch" and r.delta == math.inf

    def test_value_divergence_beyond_tolerance(self):
        r = differential(benign_outcome([1.0, 2.0, 3.0, 4.0], checksum=0.0),
                         benign_outcome([1.0, 2.0, 3.0, 4.5], checksum=0.0, device="B"))
        assert r.kind == "diff-mismatch"
        assert r.delta == pytest.approx(0.5)

    def test_checksum_divergence_alone_suffices(self):
        a = benign_outcome([1.0], shape=(1,), checksum=10.0)
        b = benign_outcome([1.0], shape=(1,), checksum=20.0, device="B")
        assert differential(a, b).kind == "diff-mismatch"

    def test_within_absolute_tolerance(self):
        a = benign_outcome([0.0], shape=(1,), checksum=0.0)
        b = benign_outcome([5e-7], shape=(1,), checksum=0.0, device="B")
        assert differential(a, b, tol_abs=1e-6).kind == "benign"

    def test_within_relative_tolerance(self):
        a = benign_outcome([1e12], shape=(1,), checksum=0.0)
        b = benign_outcome([1e12 + 1.0], shape=(1,), checksum=0.0, device="B")
        assert differential(a, b, tol_rel=1e-9).kind == "benign"

    def test_beyond_default_absolute_tolerance(self):
        a = benign_outcome([0.0], shape=(1,), checksum=0.0)
        b = benign_outcome([1e-6], shape=(1,), checksum=0.0, device="B")
        assert differential(a, b).kind == "diff-mismatch"

    def test_nan_on_both_sides_agrees(self):
        a = benign_outcome([float("nan"), 1.0], checksum=1.0)
        b = benign_outcome([float("nan"), 1.0], checksum=1.0, device="B")
        assert differential(a, b).kind == "benign"

    def test_one_sided_nan_is_mismatch(self):
        a = benign_outcome([float("nan")], shape=(1,), checksum=0.0)
        b = benign_outcome([1.0], shape=(1,), checksum=0.0, device="B")
        r = differential(a, b)
        assert r.kind == "diff-mismatch" and r.delta == math.inf

    def test_opposite_infinities_are_mismatch(self):
        a = benign_outcome([float("inf")], shape=(1,), checksum=0.0)
        b = benign_outcome([float("-inf")], shape=(1,), checksum=0.0, device="B")
        assert differential(a, b).kind == "diff-mismatch"

    def test_matching_infinities_agree(self):
        a = benign_outcome([float("inf")], shape=(1,), checksum=0.0)
        b = benign_outcome([float("inf")], shape=(1,), checksum=0.0, device="B")
        assert differential(a, b).kind == "benign"

    def test_outcome_without_block_is_incomparable(self):
        bad = ExecutionOutcome(case_id="c1", device="A", exit_code=0, stdout="ORION::OK\n")
        with pytest.raises(IncomparableOutputs):
            differential(bad, benign_outcome([1.0], shape=(1,), device="B"))

    FINITE = st.floats(allow_nan=False, allow_infinity=False,
                       min_value=-1e6, max_value=1e6)

    @given(st.lists(FINITE, min_size=1, max_size=8), st.lists(FINITE, min_size=1, max_size=8))
    @settings(max_examples=300, deadline=None)
    def test_comparison_is_symmetric(self, xs, ys):
        n = min(len(xs), len(ys))
        a = benign_outcome(xs[:n], shape=(n,))
        b = benign_outcome(ys[:n], shape=(n,), device="B")
        fwd = differential(a, b)
        rev = differential(b, a)
        assert fwd.kind == rev.kind
        assert fwd.delta == rev.delta


class TestTopFrame:
    TRACE = textwrap.dedent(
        """\
        Traceback (most recent call last):
          File "/tmp/x.py", line 3, in <module>
            run()
          File "/lib/target/ops.py", line 91, in run
            raise RuntimeError
        RuntimeError
        """
    )

    def test_python_traceback_takes_innermost_frame(self):
        assert top_frame(self.TRACE) == "/lib/target/ops.py:91"

    def test_native_style_at_line(self):
        text = "fault detected\n  at sim.reshape_copy#sm-r78\n  at main\n"
        assert top_frame(text) == "sim.reshape_copy#sm-r78"

    def test_empty_stderr(self):
        assert top_frame("") == ""

    def test_unrecognized_noise(self):
        assert top_frame("some warning\nanother line") == ""

    def test_python_frames_win_over_at_lines(self):
        text = "  at native_frame\n" + self.TRACE
        assert top_frame(text) == "/lib/target/ops.py:91"


class TestSimulatedBackend:
    def test_benign_invocation(self):
        backend = SimulatedBackend(sim.SimTarget.default())
        case = case_for([tensor("x", 0, (2, 2)), ParamValue.integer("axis", 1, 0)],
                        api="sim.reduce_dim")
        out = backend.run(case, None, "A")
        assert classify(out).kind == "benign"
        assert out.marker.summary() is not None

    def test_fault_becomes_signal(self):
        backend = SimulatedBackend(sim.SimTarget.default())
        case = case_for([tensor("x", 0, (2, 2)), ParamValue.integer("axis", 1, 7)],
                        api="sim.reduce_dim")
        out = backend.run(case, None, "A")
        assert out.signal == signal.SIGSEGV
        assert classify(out) == Verdict("crash", "SIGSEGV")
        # stderr carries an attributable frame for fingerprinting
        assert top_frame(out.stderr) == "sim.reduce_dim#sm-r2"

    def test_abort_fault(self):
        backend = SimulatedBackend(sim.SimTarget.default())
        case = case_for([tensor("x", 0, (2, 2)),
                         ParamValue.list_("perm", 1, [ParamValue.integer("", 0, 0)])],
                        api="sim.transpose_perm")
        out = backend.run(case, None, "A")
        assert out.signal == signal.SIGABRT

    def test_hang_fault_reports_timeout(self):
        backend = SimulatedBackend(sim.SimTarget.default(), timeout_s=5.0)
        case = case_for([ParamValue.integer("size", 0, 2**40)], api="sim.alloc_buffer")
        out = backend.run(case, None, "A")
        assert out.timed_out and out.wall_time_s == 5.0
        assert classify(out).kind == "hang"

    def test_unknown_api_raises(self):
        backend = SimulatedBackend(sim.SimTarget.default())
        with pytest.raises(BackendError):
            backend.run(case_for([], api="sim.nope"), None, "A")


SCRIPTS = {
    "segv": "import os, signal\nos.kill(os.getpid(), signal.SIGSEGV)\n",
    "hang": "import time\nprint('ORION::OK', flush=True)\ntime.sleep(30)\n",
    "silent": "pass\n",
    "ok": "print('ORION::OK')\n",
    "exit3": "import sys\nprint('ORION::OK')\nsys.exit(3)\n",
}


def handwritten(body, cid="aa00", device="cpu"):
    case = case_for([], cid=cid)
    rendered = codegen.RenderedCase(case_id=cid, device=device, text=body)
    return case, rendered


class TestScriptedBackend:
    def run_body(self, tmp_path, body, timeout_s=20.0, **kw):
        backend = ScriptedBackend(work_dir=tmp_path / "work", timeout_s=timeout_s, **kw)
        case, rendered = handwritten(body)
        return backend.run(case, rendered, "cpu")

    def test_real_segfault(self, tmp_path):
        out = self.run_body(tmp_path, SCRIPTS["segv"])
        assert out.signal == signal.SIGSEGV
        assert classify(out) == Verdict("crash", "SIGSEGV")

    def test_timeout(self, tmp_path):
        out = self.run_body(tmp_path, SCRIPTS["hang"], timeout_s=1.0)
        assert out.timed_out
        assert classify(out).kind == "hang"

    def test_silent_exit_has_no_marker(self, tmp_path):
        out = self.run_body(tmp_path, SCRIPTS["silent"])
        assert classify(out) == Verdict("crash", "no-marker")

    def test_ok_script(self, tmp_path):
        out = self.run_body(tmp_path, SCRIPTS["ok"])
        assert classify(out).kind == "benign"

    def test_exit_code_propagates(self, tmp_path):
        out = self.run_body(tmp_path, SCRIPTS["exit3"])
        assert classify(out) == Verdict("crash", "exit:3")

    def test_artifacts_removed_by_default(self, tmp_path):
        backend = ScriptedBackend(work_dir=tmp_path / "work", timeout_s=20)
        case, rendered = handwritten(SCRIPTS["ok"])
        backend.run(case, rendered, "cpu")
        assert not list((tmp_path / "work").glob("*.script"))

    def test_keep_artifacts(self, tmp_path):
        backend = ScriptedBackend(work_dir=tmp_path / "work", timeout_s=20,
                                  keep_artifacts=True)
        case, rendered = handwritten(SCRIPTS["ok"])
        backend.run(case, rendered, "cpu")
        assert (tmp_path / "work" / "aa00.cpu.script").exists()

    def test_missing_runner_binary(self, tmp_path):
        with pytest.raises(BackendError):
            ScriptedBackend(runner=["/no/such/interpreter"],
                            work_dir=tmp_path / "work", timeout_s=5)

    def test_rendered_case_required(self, tmp_path):
        backend = ScriptedBackend(work_dir=tmp_path / "work", timeout_s=5)
        with pytest.raises(BackendError):
            backend.run(case_for([]), None, "cpu")

    def test_env_is_scrubbed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ORION_SECRET_PROBE", "leak")
        body = ("import os\n"
                "print('ORION::OK' if 'ORION_SECRET_PROBE' not in os.environ"
                " else 'ORION::EXC:Leak')\n")
        out = self.run_body(tmp_path, body)
        assert classify(out).kind == "benign"

    def test_stream_clipping(self, tmp_path):
        body = "print('x' * 500000)\nprint('ORION::OK')\n"
        out = self.run_body(tmp_path, body)
        assert len(out.stdout) <= executor.STREAM_LIMIT
