"""Script rendering and the marker wire format.

A rendered script is a self-contained program that builds the mutated
arguments, invokes the target API on a chosen device, and reports through
a frozen marker grammar on stdout:

    ORION::OK                 the call returned
    ORION::EXC:<type>         the call raised <type>
    ORION-OUT-BEGIN / -END    bounded output summary between the markers

The grammar is shared wire format: the executor's oracles and the host
runner shim both parse it, so it never changes shape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .values import DType, Fill, ParamKind, ParamValue, TensorValue

VERDICT_PREFIX = "ORION::"
VERDICT_OK = "ORION::OK"
VERDICT_EXC_PREFIX = "ORION::EXC:"
OUT_BEGIN = "ORION-OUT-BEGIN"
OUT_END = "ORION-OUT-END"

DEFAULT_FILTERED_EXCEPTIONS = ("ValueError", "InvalidArgumentError")

SUMMARY_VALUE_LIMIT = 64


@dataclass(frozen=True)
class OutputSummary:
    """Bounded stand-in for a full output tensor."""

    shape: tuple[int, ...]
    dtype: str
    values: tuple[float, ...]
    checksum: float

    def to_dict(self) -> dict:
        def enc(x: float):
            if isinstance(x, float) and math.isnan(x):
                return "NaN"
            if isinstance(x, float) and math.isinf(x):
                return "Infinity" if x > 0 else "-Infinity"
            return x

        return {
            "shape": list(self.shape),
            "dtype": self.dtype,
            "values": [enc(v) for v in self.values],
            "checksum": enc(self.checksum),
        }

    @staticmethod
    def from_dict(data: dict) -> "OutputSummary":
        special = {"NaN": float("nan"), "Infinity": float("inf"), "-Infinity": float("-inf")}

        def dec(x) -> float:
            if isinstance(x, str):
                return special[x]
            return float(x)

        return OutputSummary(
            shape=tuple(int(e) for e in data["shape"]),
            dtype=str(data["dtype"]),
            values=tuple(dec(v) for v in data["values"][:SUMMARY_VALUE_LIMIT]),
            checksum=dec(data["checksum"]),
        )


@dataclass(frozen=True)
class MarkerParse:
    """Total parse of a script's stdout: never raises, absent markers get
    status "no-marker" and are treated downstream as abnormal-exit evidence."""

    status: str  # "ok" | "exc" | "no-marker"
    exc_name: str | None = None
    block: str | None = None

    def summary(self) -> OutputSummary | None:
        if self.block is None:
            return None
        try:
            return OutputSummary.from_dict(json.loads(self.block))
        except (ValueError, KeyError, TypeError):
            return None


def parse_markers(stdout: bytes | str) -> MarkerParse:
    text = stdout.decode("utf-8", "replace") if isinstance(stdout, bytes) else stdout
    status = "no-marker"
    exc_name = None
    block: str | None = None
    collecting: list[str] | None = None
    for line in text.splitlines():
        line = line.rstrip("\r")
        if line == OUT_BEGIN:
            collecting = []
            continue
        if line == OUT_END:
            if collecting is not None:
                block = "\n".join(collecting)
            collecting = None
            continue
        if collecting is not None:
            collecting.append(line)
            continue
        if line == VERDICT_OK:
            status, exc_name = "ok", None
        elif line.startswith(VERDICT_EXC_PREFIX):
            status, exc_name = "exc", line[len(VERDICT_EXC_PREFIX) :].strip()
    return MarkerParse(status=status, exc_name=exc_name, block=block)


# --- rendering -------------------------------------------------------------


def py_literal(value: Any) -> str:
    """Injective Python literal for a scalar. repr covers strings exactly."""
    if isinstance(value, float):
        if math.isnan(value):
            return 'float("nan")'
        if math.isinf(value):
            return 'float("inf")' if value > 0 else 'float("-inf")'
    return repr(value)


# Prints the verdict line and, on success, the bounded summary block. The
# helper duck-types the result: anything with shape/dtype/values summarizes
# like a tensor, everything else is coerced to a value list.
SUMMARY_EPILOGUE = f'''
def _summary(obj):
    shape = list(getattr(obj, "shape", []) or [])
    dtype = str(getattr(obj, "dtype", type(obj).__name__))
    values = getattr(obj, "values", None)
    if values is None:
        values = list(obj) if isinstance(obj, (list, tuple)) else [obj]
    out = []
    for v in list(values)[:{SUMMARY_VALUE_LIMIT}]:
        try:
            out.append(float(v))
        except (TypeError, ValueError):
            out.append(float(len(v)) if hasattr(v, "__len__") else 0.0)
    checksum = getattr(obj, "checksum", None)
    if checksum is None:
        checksum = float(sum(out))
    def _enc(x):
        import math as _m
        if isinstance(x, float) and _m.isnan(x):
            return "NaN"
        if isinstance(x, float) and _m.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return {{"shape": shape, "dtype": dtype, "values": [_enc(v) for v in out], "checksum": _enc(float(checksum))}}
'''


@dataclass(frozen=True)
class TargetProfile:
    """How to phrase a case for one target runtime."""

    name: str
    preamble: str
    device_stmt: str  # .format(device=...)
    tensor_const: str  # .format(shape=..., value=..., dtype=...)
    tensor_uniform: str  # .format(shape=..., low=..., high=..., seed=..., dtype=...)
    summary_helper: str = SUMMARY_EPILOGUE
    filtered_exceptions: tuple[str, ...] = DEFAULT_FILTERED_EXCEPTIONS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "preamble": self.preamble,
            "device_stmt": self.device_stmt,
            "tensor_const": self.tensor_const,
            "tensor_uniform": self.tensor_uniform,
            "filtered_exceptions": list(self.filtered_exceptions),
        }


def python_profile(module: str, filtered: Iterable[str] = DEFAULT_FILTERED_EXCEPTIONS) -> TargetProfile:
    """Profile for a Python target package exposing full/random_uniform/set_device."""
    return TargetProfile(
        name=f"python:{module}",
        preamble=f"import {module}",
        device_stmt=f"{module}.set_device({{device}})",
        tensor_const=f"{module}.full({{shape}}, {{value}}, dtype={{dtype}})",
        tensor_uniform=f"{module}.random_uniform({{shape}}, {{low}}, {{high}}, seed={{seed}}, dtype={{dtype}})",
        filtered_exceptions=tuple(filtered),
    )


def render_value(p: ParamValue, profile: TargetProfile) -> str:
    if p.kind is ParamKind.TENSOR:
        t: TensorValue = p.value
        shape = "[" + ", ".join(str(e) for e in t.shape) + "]"
        if t.fill.dist == "uniform":
            return profile.tensor_uniform.format(
                shape=shape,
                low=py_literal(t.fill.low),
                high=py_literal(t.fill.high),
                seed=py_literal(t.fill.seed),
                dtype=py_literal(t.dtype.value),
            )
        return profile.tensor_const.format(
            shape=shape, value=py_literal(t.fill.value), dtype=py_literal(t.dtype.value)
        )
    if p.kind is ParamKind.LIST:
        return "[" + ", ".join(render_value(e, profile) for e in p.value) + "]"
    if p.kind is ParamKind.NONE:
        return "None"
    return py_literal(p.value)


@dataclass(frozen=True)
class RenderedCase:
    case_id: str
    device: str
    text: str

    def file_name(self) -> str:
        return f"{self.case_id}.{self.device}.script"

    def write_to(self, work_dir: str | Path) -> Path:
        work = Path(work_dir)
        work.mkdir(parents=True, exist_ok=True)
        path = work / self.file_name()
        path.write_text(self.text)
        return path


def render(case, profile: TargetProfile, device: str) -> RenderedCase:
    """Render one generated case for one device. Pure text-in, text-out:
    identical (case, profile, device) yields byte-identical scripts."""
    ti = case.input
    lines: list[str] = []
    lines.append("import sys, json")
    lines.append(profile.preamble)
    lines.append(profile.device_stmt.format(device=py_literal(device)))
    lines.append(profile.summary_helper.rstrip("\n"))
    lines.append("try:")
    args = []
    for i, p in enumerate(ti.params):
        var = f"_a{i}"
        lines.append(f"    {var} = {render_value(p, profile)}")
        if p.name and p.name.isidentifier():
            args.append(f"{p.name}={var}")
        else:
            args.append(var)
    lines.append(f"    _result = {ti.api_name}({', '.join(args)})")
    lines.append("except BaseException as _e:")
    lines.append(f'    print("{VERDICT_EXC_PREFIX}" + type(_e).__name__)')
    lines.append("    sys.stdout.flush()")
    lines.append("else:")
    lines.append(f'    print("{VERDICT_OK}")')
    lines.append(f'    print("{OUT_BEGIN}")')
    lines.append("    print(json.dumps(_summary(_result)))")
    lines.append(f'    print("{OUT_END}")')
    lines.append("    sys.stdout.flush()")
    return RenderedCase(case_id=case.case_id, device=device, text="\n".join(lines) + "\n")
