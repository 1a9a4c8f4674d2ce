"""Case execution and verdict oracles.

Two backends share one outcome shape. The simulated backend dispatches
in-process to the simulated target and synthesizes the same evidence a
real process would leave (marker stdout, signal numbers, timeouts); the
scripted backend spawns one isolated target-runtime process per case
with a scrubbed environment and resource limits.

The crash oracle turns an outcome into a verdict; the differential
oracle compares two benign outcomes element-wise under tolerance.
InvalidInput exists so expected rejections never pollute findings.
"""

from __future__ import annotations

import json
import math
import os
import re
import shutil
import signal as _signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .codegen import (
    DEFAULT_FILTERED_EXCEPTIONS,
    OUT_BEGIN,
    OUT_END,
    VERDICT_OK,
    MarkerParse,
    OutputSummary,
    RenderedCase,
    TargetProfile,
    parse_markers,
)
from .sim import (
    FAULT_ABORT,
    FAULT_HANG,
    FAULT_SEGV,
    SimTarget,
)
from .sim import UnknownApi as SimUnknownApi

STREAM_LIMIT = 65536

V_CRASH = "crash"
V_INVALID_INPUT = "invalid-input"
V_HANG = "hang"
V_BENIGN = "benign"
V_DIFF_MISMATCH = "diff-mismatch"
V_INFRA_ERROR = "infra-error"

FINDING_VERDICTS = (V_CRASH, V_HANG, V_DIFF_MISMATCH)


class BackendError(Exception):
    """Backend cannot run at all (bad runner, missing target)."""


class IncomparableOutputs(Exception):
    """Differential oracle fed outcomes without usable output blocks."""


@dataclass(frozen=True)
class ExecutionOutcome:
    """How one case terminated on one device.

    Exactly one of exit_code / signal / timed_out explains termination.
    """

    case_id: str
    device: str
    exit_code: int | None = None
    signal: int | None = None
    timed_out: bool = False
    stdout: str = ""
    stderr: str = ""
    wall_time_s: float = 0.0

    def __post_init__(self):
        causes = sum((self.exit_code is not None, self.signal is not None, bool(self.timed_out)))
        if causes != 1:
            raise ValueError(f"outcome needs exactly one termination cause, got {causes}")

    @property
    def marker(self) -> MarkerParse:
        return parse_markers(self.stdout)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "device": self.device,
            "exit_code": self.exit_code,
            "signal": self.signal,
            "timed_out": self.timed_out,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "wall_time_s": self.wall_time_s,
        }


@dataclass(frozen=True)
class Verdict:
    kind: str
    detail: str = ""
    delta: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "detail": self.detail, "delta": self.delta}

    @staticmethod
    def from_dict(data: dict) -> "Verdict":
        return Verdict(kind=data["kind"], detail=data.get("detail", ""), delta=data.get("delta"))


_PY_FRAME = re.compile(r'^\s*File "(.+)", line (\d+)')
_SIM_FRAME = re.compile(r"^\s*at\s+(\S+)")


def top_frame(stderr: str) -> str:
    """Innermost stack frame: last python frame line, else first 'at ...' line."""
    frames = [m for line in stderr.splitlines() if (m := _PY_FRAME.match(line))]
    if frames:
        m = frames[-1]
        return f"{m.group(1)}:{m.group(2)}"
    for line in stderr.splitlines():
        m = _SIM_FRAME.match(line)
        if m:
            return m.group(1)
    return ""


def _signal_name(num: int) -> str:
    try:
        return _signal.Signals(num).name
    except ValueError:
        return f"SIG{num}"


def classify(outcome: ExecutionOutcome, profile: TargetProfile | None = None) -> Verdict:
    """Total classification of one outcome.

    timeout -> hang; killed by signal -> crash; a marked exception is an
    expected rejection when its type is in the profile's filter, else a
    runtime-error crash; a clean exit with the OK marker is benign; any
    other termination (nonzero exit, missing marker) is crash evidence.
    """
    filtered = profile.filtered_exceptions if profile else DEFAULT_FILTERED_EXCEPTIONS
    if outcome.timed_out:
        return Verdict(V_HANG, detail="timeout")
    if outcome.signal is not None:
        return Verdict(V_CRASH, detail=_signal_name(outcome.signal))
    marker = outcome.marker
    if marker.status == "exc":
        name = marker.exc_name or "Exception"
        if name in filtered:
            return Verdict(V_INVALID_INPUT, detail=name)
        return Verdict(V_CRASH, detail=f"runtime-error:{name}")
    if marker.status == "ok" and outcome.exit_code == 0:
        return Verdict(V_BENIGN)
    if outcome.exit_code != 0:
        return Verdict(V_CRASH, detail=f"exit:{outcome.exit_code}")
    return Verdict(V_CRASH, detail="no-marker")


def _summary_of(outcome: ExecutionOutcome) -> OutputSummary:
    summary = outcome.marker.summary()
    if summary is None:
        raise IncomparableOutputs(f"case {outcome.case_id} on {outcome.device} has no output block")
    return summary


def differential(
    out_a: ExecutionOutcome,
    out_b: ExecutionOutcome,
    tol_rel: float = 1e-6,
    tol_abs: float = 1e-9,
) -> Verdict:
    """Compare two benign outcomes. Symmetric: swapping arguments yields
    the same verdict and delta. NaN on both sides of a slot is agreement."""
    a, b = _summary_of(out_a), _summary_of(out_b)
    if a.shape != b.shape:
        return Verdict(V_DIFF_MISMATCH, detail="shape", delta=math.inf)
    if a.dtype != b.dtype:
        return Verdict(V_DIFF_MISMATCH, detail="dtype", delta=math.inf)
    if len(a.values) != len(b.values):
        return Verdict(V_DIFF_MISMATCH, detail="values", delta=math.inf)

    worst = 0.0
    mismatch = False
    pairs = list(zip(a.values + (a.checksum,), b.values + (b.checksum,)))
    for va, vb in pairs:
        a_nan, b_nan = math.isnan(va), math.isnan(vb)
        if a_nan and b_nan:
            continue
        if a_nan or b_nan:
            return Verdict(V_DIFF_MISMATCH, detail="values", delta=math.inf)
        delta = abs(va - vb)
        if math.isinf(delta):
            return Verdict(V_DIFF_MISMATCH, detail="values", delta=math.inf)
        threshold = max(tol_abs, tol_rel * max(abs(va), abs(vb)))
        if delta > threshold:
            mismatch = True
            worst = max(worst, delta)
    if mismatch:
        return Verdict(V_DIFF_MISMATCH, detail="values", delta=worst)
    return Verdict(V_BENIGN)


# --- backends -----------------------------------------------------------------


class SimulatedBackend:
    """In-process dispatch to the simulated target.

    Faults become synthetic outcomes with the same evidence shape a real
    process leaves: a signal number and a stack-frame-ish line on stderr,
    or a timeout at the configured budget.
    """

    name = "simulated"

    def __init__(self, target: SimTarget, timeout_s: float = 30.0):
        self.target = target
        self.timeout_s = timeout_s

    def run(self, case, rendered: RenderedCase | None, device: str) -> ExecutionOutcome:
        try:
            result = self.target.invoke(case.api_name, case.input.params, device)
        except SimUnknownApi as exc:
            raise BackendError(f"unknown simulated api: {exc}") from None
        if result.kind == "output":
            body = "\n".join(
                [VERDICT_OK, OUT_BEGIN, json.dumps(result.summary.to_dict()), OUT_END, ""]
            )
            return ExecutionOutcome(case.case_id, device, exit_code=0, stdout=body)
        bug = result.fault
        stderr = f"fault: {bug.description}\n  at {bug.api_name}#{bug.bug_id}\n"
        if bug.fault == FAULT_SEGV:
            return ExecutionOutcome(case.case_id, device, signal=int(_signal.SIGSEGV), stderr=stderr)
        if bug.fault == FAULT_ABORT:
            return ExecutionOutcome(case.case_id, device, signal=int(_signal.SIGABRT), stderr=stderr)
        if bug.fault == FAULT_HANG:
            return ExecutionOutcome(
                case.case_id, device, timed_out=True, stderr=stderr, wall_time_s=self.timeout_s
            )
        raise BackendError(f"unmapped fault kind {bug.fault!r}")  # pragma: no cover


DEFAULT_ENV_ALLOWLIST = (
    "PATH",
    "HOME",
    "LANG",
    "LC_ALL",
    "PYTHONPATH",
    "PYTHONHASHSEED",
    "TMPDIR",
    "VIRTUAL_ENV",
)


class ScriptedBackend:
    """One isolated process per case.

    Scripts land in work_dir under the frozen <case_id>.<device>.script
    name; each run gets a throwaway working directory, a scrubbed
    environment, and an address-space cap. Artifacts are deleted unless
    keep_artifacts is set.
    """

    name = "scripted"

    def __init__(
        self,
        runner: Sequence[str] | None = None,
        work_dir: str | Path = "work",
        timeout_s: float = 30.0,
        keep_artifacts: bool = False,
        env_allowlist: Sequence[str] = DEFAULT_ENV_ALLOWLIST,
        address_space_mb: int = 4096,
    ):
        self.runner = list(runner) if runner else [sys.executable]
        if not shutil.which(self.runner[0]) and not Path(self.runner[0]).exists():
            raise BackendError(f"runner not found: {self.runner[0]}")
        self.work_dir = Path(work_dir)
        self.timeout_s = timeout_s
        self.keep_artifacts = keep_artifacts
        self.env_allowlist = tuple(env_allowlist)
        self.address_space_mb = address_space_mb

    def _env(self) -> dict[str, str]:
        return {k: os.environ[k] for k in self.env_allowlist if k in os.environ}

    def _limits(self):
        if os.name != "posix":  # pragma: no cover - posix sandbox
            return None
        import resource

        cap = self.address_space_mb * 1024 * 1024

        def apply():
            try:
                resource.setrlimit(resource.RLIMIT_AS, (cap, cap))
                resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
            except (ValueError, OSError):
                pass

        return apply

    def run(self, case, rendered: RenderedCase | None, device: str) -> ExecutionOutcome:
        if rendered is None:
            raise BackendError("scripted backend needs a rendered case")
        # absolute: the child runs from its own scratch cwd
        script_path = rendered.write_to(self.work_dir).resolve()
        case_cwd = Path(tempfile.mkdtemp(prefix=f"{rendered.case_id}.", dir=self.work_dir))
        start = time.monotonic()
        try:
            proc = subprocess.run(
                self.runner + [str(script_path)],
                cwd=case_cwd,
                env=self._env(),
                capture_output=True,
                timeout=self.timeout_s,
                preexec_fn=self._limits(),
            )
        except subprocess.TimeoutExpired as exc:
            return ExecutionOutcome(
                case_id=rendered.case_id,
                device=device,
                timed_out=True,
                stdout=_clip(exc.stdout),
                stderr=_clip(exc.stderr),
                wall_time_s=time.monotonic() - start,
            )
        finally:
            if not self.keep_artifacts:
                shutil.rmtree(case_cwd, ignore_errors=True)
                script_path.unlink(missing_ok=True)
        wall = time.monotonic() - start
        code, sig = proc.returncode, None
        if code is not None and code < 0:
            code, sig = None, -proc.returncode
        return ExecutionOutcome(
            case_id=rendered.case_id,
            device=device,
            exit_code=code,
            signal=sig,
            stdout=_clip(proc.stdout),
            stderr=_clip(proc.stderr),
            wall_time_s=wall,
        )


def _clip(data: bytes | str | None) -> str:
    if data is None:
        return ""
    text = data.decode("utf-8", "replace") if isinstance(data, bytes) else data
    return text[-STREAM_LIMIT:]


def execute(case, rendered: RenderedCase | None, device: str, backend) -> ExecutionOutcome:
    return backend.run(case, rendered, device)
