"""Deterministic simulated target.

A miniature API surface with one planted bug per mutation-rule family
plus one cross-device divergence. Faults never execute: invoke() returns
a fault code that the simulated backend translates into the same outcome
shapes a real process would produce (signal, timeout, diverging output).

Trigger predicates are engineered to be mutually exclusive across rule
families (magnitude bounds, rank and length guards) so a single-rule
campaign can only ever find its own family's bug; seed arguments use
index 0 so shape mutations never invalidate a companion argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .codegen import SUMMARY_VALUE_LIMIT, OutputSummary
from .store import TraceRecord, make_record
from .values import (
    DType,
    Fill,
    ParamKind,
    ParamValue,
    Source,
    TensorValue,
    TestInput,
)

FAULT_SEGV = "segfault"
FAULT_ABORT = "abort"
FAULT_HANG = "hang"
FAULT_DIFF = "diff"

REFERENCE_DEVICES = ("A", "cpu")

INT32_MAX = 2**31 - 1
SMALL_INDEX_BOUND = 2**16


class UnknownApi(Exception):
    pass


@dataclass(frozen=True)
class PlantedBug:
    bug_id: str
    api_name: str
    rule_family: tuple[str, ...]
    fault: str
    description: str
    trigger: Callable[[Sequence[ParamValue]], bool]


@dataclass(frozen=True)
class SimApiSpec:
    name: str
    signature: str
    behavior: Callable[[Sequence[ParamValue], str], OutputSummary]
    bugs: tuple[PlantedBug, ...] = ()


@dataclass(frozen=True)
class SimResult:
    kind: str  # "output" | "fault"
    summary: OutputSummary | None = None
    fault: PlantedBug | None = None


# --- param accessors (tolerant: wrong kind reads as absent) ---------------


def _tensor_at(params: Sequence[ParamValue], i: int) -> TensorValue | None:
    if i < len(params) and params[i].kind is ParamKind.TENSOR:
        return params[i].value
    return None


def _int_at(params: Sequence[ParamValue], i: int) -> int | None:
    if i < len(params) and params[i].kind is ParamKind.INT:
        return params[i].value
    return None


def _list_at(params: Sequence[ParamValue], i: int) -> tuple[ParamValue, ...] | None:
    if i < len(params) and params[i].kind is ParamKind.LIST:
        return params[i].value
    return None


def _str_at(params: Sequence[ParamValue], i: int) -> str | None:
    if i < len(params) and params[i].kind is ParamKind.STR:
        return params[i].value
    return None


def _const_fill(t: TensorValue) -> float | None:
    if t.fill.dist != "const":
        return None
    v = t.fill.value
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        return None
    return float(v)


def _valid_axis_set(t: TensorValue) -> set[int]:
    return set(range(t.rank + 1)) | set(t.shape)


# --- output summaries ------------------------------------------------------


def _summary(shape: tuple[int, ...], dtype: str, value: float) -> OutputSummary:
    count = max(0, math.prod(shape)) if shape else 1
    n = min(SUMMARY_VALUE_LIMIT, count)
    return OutputSummary(
        shape=shape, dtype=dtype, values=(value,) * n, checksum=value * count
    )


def _tensor_summary(t: TensorValue | None, scale: float = 1.0, bias: float = 0.0) -> OutputSummary:
    if t is None:
        return _summary((), "float32", 0.0)
    val = t.fill.representative() * scale + bias
    return _summary(t.shape, t.dtype.value, val)


# --- trigger predicates -----------------------------------------------------


def _trig_rank_mismatch(params):
    a, b = _tensor_at(params, 0), _tensor_at(params, 1)
    return a is not None and b is not None and a.rank >= 1 and b.rank >= 1 and a.rank != b.rank


def _trig_invalid_axis(params):
    t, axis = _tensor_at(params, 0), _int_at(params, 1)
    if t is None or axis is None:
        return False
    return axis not in _valid_axis_set(t) and abs(axis) < INT32_MAX + 1


def _trig_perm_length(params):
    t, perm = _tensor_at(params, 0), _list_at(params, 1)
    if t is None or perm is None:
        return False
    return t.rank >= 1 and 0 < len(perm) != t.rank


def _trig_small_invalid_index(params):
    t, idx = _tensor_at(params, 0), _list_at(params, 1)
    if t is None or idx is None:
        return False
    valid = _valid_axis_set(t)
    for e in idx:
        if e.kind is ParamKind.INT and e.value not in valid and abs(e.value) <= SMALL_INDEX_BOUND:
            return True
    return False


def _trig_length_mismatch(params):
    a, b = _list_at(params, 0), _list_at(params, 1)
    return a is not None and b is not None and len(a) > 0 and len(b) > 0 and len(a) != len(b)


def _trig_nan_fill(params):
    t = _tensor_at(params, 0)
    if t is None:
        return False
    v = _const_fill(t)
    return v is not None and math.isnan(v)


def _trig_negative_extent(params):
    t = _tensor_at(params, 0)
    return t is not None and any(e < 0 for e in t.shape)


def _trig_huge_alloc(params):
    n = _int_at(params, 0)
    return n is not None and n > INT32_MAX


def _trig_flag_became_int(params):
    return len(params) > 0 and params[0].kind is ParamKind.INT


def _trig_non_ascii(params):
    s = _str_at(params, 0)
    return s is not None and any(ord(c) > 127 for c in s)


def _trig_huge_list_element(params):
    items = _list_at(params, 1)
    if items is None:
        return False
    return any(e.kind is ParamKind.INT and e.value > INT32_MAX for e in items)


def _trig_negative_fill(params):
    t = _tensor_at(params, 0)
    if t is None:
        return False
    v = _const_fill(t)
    return v is not None and v < 0


# --- behaviors ---------------------------------------------------------------


def _bh_search_sorted(params, device):
    return _tensor_summary(_tensor_at(params, 1), scale=0.0)


def _bh_reduce_dim(params, device):
    t = _tensor_at(params, 0)
    if t is None or t.rank == 0:
        return _tensor_summary(t)
    out = t.with_shape(t.shape[1:])
    return _tensor_summary(out)


def _bh_transpose(params, device):
    t = _tensor_at(params, 0)
    if t is None:
        return _summary((), "float32", 0.0)
    return _tensor_summary(t.with_shape(tuple(reversed(t.shape))))


def _bh_identity(params, device):
    return _tensor_summary(_tensor_at(params, 0))


def _bh_merge_pairs(params, device):
    a = _list_at(params, 0) or ()
    return _summary((len(a),), "float32", 2.0)


def _bh_normalize(params, device):
    return _tensor_summary(_tensor_at(params, 0), scale=0.5)


def _bh_alloc(params, device):
    n = _int_at(params, 0) or 0
    return _summary((n,), "float32", 1.0)


def _bh_set_flag(params, device):
    flag = len(params) > 0 and params[0].kind is ParamKind.BOOL and params[0].value
    return _summary((), "bool", 1.0 if flag else 0.0)


def _bh_encode(params, device):
    s = _str_at(params, 0) or ""
    return _summary((len(s),), "string", float(len(s)))


def _bh_scale_values(params, device):
    t = _tensor_at(params, 0)
    if t is None:
        return _summary((), "float32", 0.0)
    val = t.fill.representative() * 2.0
    diverged = device not in REFERENCE_DEVICES and _trig_negative_fill(params)
    if diverged:
        val = abs(val)
    return _summary(t.shape, t.dtype.value, val)


def _bug(bug_id, api, family, fault, description, trigger) -> PlantedBug:
    return PlantedBug(bug_id, api, tuple(family), fault, description, trigger)


def _default_specs() -> tuple[SimApiSpec, ...]:
    return (
        SimApiSpec(
            "sim.search_sorted", "(sorted_inputs: tensor, values: tensor)", _bh_search_sorted,
            (_bug("sm-r1", "sim.search_sorted", ["R1"], FAULT_SEGV,
                  "unchecked walk when both operands are ranked but ranks disagree",
                  _trig_rank_mismatch),),
        ),
        SimApiSpec(
            "sim.reduce_dim", "(input: tensor, axis: int)", _bh_reduce_dim,
            (_bug("sm-r2", "sim.reduce_dim", ["R2"], FAULT_SEGV,
                  "axis outside rank/extent set indexes past the dim array (small values only)",
                  _trig_invalid_axis),),
        ),
        SimApiSpec(
            "sim.transpose_perm", "(input: tensor, perm: list)", _bh_transpose,
            (_bug("sm-r3", "sim.transpose_perm", ["R3"], FAULT_ABORT,
                  "non-empty permutation whose length disagrees with a ranked input",
                  _trig_perm_length),),
        ),
        SimApiSpec(
            "sim.gather_axes", "(input: tensor, indices: list)", _bh_identity,
            (_bug("sm-r4", "sim.gather_axes", ["R4"], FAULT_SEGV,
                  "small out-of-range index element dereferences a stale slot",
                  _trig_small_invalid_index),),
        ),
        SimApiSpec(
            "sim.merge_pairs", "(left: list, right: list)", _bh_merge_pairs,
            (_bug("sm-r5", "sim.merge_pairs", ["R5"], FAULT_ABORT,
                  "two non-empty lists of different lengths overrun the zip walk",
                  _trig_length_mismatch),),
        ),
        SimApiSpec(
            "sim.normalize", "(input: tensor)", _bh_normalize,
            (_bug("sm-r6", "sim.normalize", ["R6"], FAULT_ABORT,
                  "NaN fill poisons the running mean and trips an internal assert",
                  _trig_nan_fill),),
        ),
        SimApiSpec(
            "sim.reshape_copy", "(input: tensor)", _bh_identity,
            (_bug("sm-r78", "sim.reshape_copy", ["R7", "R8"], FAULT_SEGV,
                  "negative extent flows into an unchecked allocation size",
                  _trig_negative_extent),),
        ),
        SimApiSpec(
            "sim.alloc_buffer", "(size: int)", _bh_alloc,
            (_bug("sm-r11", "sim.alloc_buffer", ["R11"], FAULT_HANG,
                  "sizes beyond int32 spin the retry loop forever",
                  _trig_huge_alloc),),
        ),
        SimApiSpec(
            "sim.set_flag", "(flag: bool)", _bh_set_flag,
            (_bug("sm-r12", "sim.set_flag", ["R12"], FAULT_ABORT,
                  "integer smuggled into the flag slot hits an unchecked union read",
                  _trig_flag_became_int),),
        ),
        SimApiSpec(
            "sim.encode_name", "(name: str)", _bh_encode,
            (_bug("sm-r13", "sim.encode_name", ["R13"], FAULT_SEGV,
                  "non-ascii bytes overflow the fixed ascii scratch buffer",
                  _trig_non_ascii),),
        ),
        SimApiSpec(
            "sim.pad_edges", "(input: tensor, paddings: list)", _bh_identity,
            (_bug("sm-r14", "sim.pad_edges", ["R14"], FAULT_ABORT,
                  "padding element beyond int32 wraps the row stride",
                  _trig_huge_list_element),),
        ),
        SimApiSpec(
            "sim.scale_values", "(input: tensor)", _bh_scale_values,
            (_bug("sm-diff", "sim.scale_values", ["R6"], FAULT_DIFF,
                  "non-reference devices drop the sign of negative fills",
                  _trig_negative_fill),),
        ),
    )


class SimTarget:
    def __init__(self, specs: Iterable[SimApiSpec]):
        self.specs: dict[str, SimApiSpec] = {s.name: s for s in specs}

    @staticmethod
    def default(enabled_bugs: Iterable[str] | None = None) -> "SimTarget":
        """Full catalog, or one restricted to the given bug ids."""
        specs = _default_specs()
        if enabled_bugs is None:
            return SimTarget(specs)
        allowed = set(enabled_bugs)
        unknown = allowed - {b.bug_id for s in specs for b in s.bugs}
        if unknown:
            raise ValueError(f"unknown bug ids: {sorted(unknown)}")
        return SimTarget(
            SimApiSpec(s.name, s.signature, s.behavior,
                       tuple(b for b in s.bugs if b.bug_id in allowed))
            for s in specs
        )

    def bugs(self) -> list[PlantedBug]:
        return [b for s in self.specs.values() for b in s.bugs]

    def api_names(self) -> list[str]:
        return sorted(self.specs)

    def invoke(self, api: str, params: Sequence[ParamValue], device: str = "A") -> SimResult:
        spec = self.specs.get(api)
        if spec is None:
            raise UnknownApi(api)
        for bug in spec.bugs:
            if bug.fault != FAULT_DIFF and bug.trigger(params):
                return SimResult(kind="fault", fault=bug)
        return SimResult(kind="output", summary=spec.behavior(params, device))


# --- shipped benign seeds -----------------------------------------------------


def _t(name: str, pos: int, shape: tuple[int, ...], fill: float = 1.0,
       dtype: DType = DType.FLOAT32) -> ParamValue:
    return ParamValue.tensor(name, pos, TensorValue(Fill.const(fill), shape, dtype))


def _ints(name: str, pos: int, values: tuple[int, ...]) -> ParamValue:
    return ParamValue.list_(name, pos, [ParamValue.integer("", i, v) for i, v in enumerate(values)])


def seed_catalog() -> list[TraceRecord]:
    """At least one benign seed per simulated API, as storable records."""
    inputs = [
        TestInput("sim.search_sorted", (_t("sorted_inputs", 0, (2, 3)), _t("values", 1, (2, 3), 2.0))),
        TestInput("sim.reduce_dim", (_t("input", 0, (3, 3)), ParamValue.integer("axis", 1, 0))),
        TestInput("sim.transpose_perm", (_t("input", 0, (2, 2)), _ints("perm", 1, (0, 1)))),
        TestInput("sim.gather_axes", (_t("input", 0, (3, 3)), _ints("indices", 1, (0,)))),
        TestInput("sim.merge_pairs", (_ints("left", 0, (1, 2)), _ints("right", 1, (3, 4)))),
        TestInput("sim.normalize", (_t("input", 0, (2, 2), 0.5),)),
        TestInput("sim.reshape_copy", (_t("input", 0, (2, 3)),)),
        TestInput("sim.alloc_buffer", (ParamValue.integer("size", 0, 64),)),
        TestInput("sim.set_flag", (ParamValue.boolean("flag", 0, True),)),
        TestInput("sim.encode_name", (ParamValue.string("name", 0, "tensor"),)),
        TestInput("sim.pad_edges", (_t("input", 0, (2, 2)), _ints("paddings", 1, (1, 1, 1, 1)))),
        TestInput("sim.scale_values", (_t("input", 0, (2, 2), 0.5),)),
    ]
    return [make_record(ti) for ti in inputs]


def soundness_violations(target: SimTarget, devices: Sequence[str] = ("A", "B")) -> list[str]:
    """Benign seeds must neither fault nor diverge. Returns violations."""
    problems = []
    for rec in seed_catalog():
        api, params = rec.api_name, rec.input.params
        if api not in target.specs:
            continue
        outputs = []
        for device in devices:
            result = target.invoke(api, params, device)
            if result.kind == "fault":
                problems.append(f"{api}: seed {rec.record_id} faults ({result.fault.bug_id})")
                break
            outputs.append(result.summary)
        if len(outputs) == len(devices) and any(o != outputs[0] for o in outputs[1:]):
            problems.append(f"{api}: seed {rec.record_id} diverges across devices")
    return problems
