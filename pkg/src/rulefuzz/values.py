"""Typed value universe for recorded API invocations.

Tensors are carried as descriptors (fill + shape + dtype), never as
materialized buffers, so mutated shapes with negative or astronomically
large extents stay representable and serialize losslessly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable


class SerializationError(Exception):
    """Malformed bytes or an object tree that cannot be encoded."""


class SchemaError(SerializationError):
    """Well-formed JSON that violates the record schema.

    ``line`` carries the 1-based line number when raised during JSONL
    ingestion, else None.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class IllegalKindForType(Exception):
    """Corner kind requested for a dtype that cannot carry it."""


class DType(str, Enum):
    FLOAT16 = "float16"
    FLOAT32 = "float32"
    FLOAT64 = "float64"
    INT8 = "int8"
    INT16 = "int16"
    INT32 = "int32"
    INT64 = "int64"
    UINT8 = "uint8"
    BOOL = "bool"
    COMPLEX64 = "complex64"
    STRING = "string"

    @property
    def is_float(self) -> bool:
        return self in (DType.FLOAT16, DType.FLOAT32, DType.FLOAT64)

    @property
    def is_complex(self) -> bool:
        return self is DType.COMPLEX64

    @property
    def is_integer(self) -> bool:
        return self in (DType.INT8, DType.INT16, DType.INT32, DType.INT64, DType.UINT8)

    @property
    def is_string(self) -> bool:
        return self is DType.STRING


class ParamKind(str, Enum):
    TENSOR = "tensor"
    INT = "int"
    REAL = "real"
    BOOL = "bool"
    STR = "str"
    LIST = "list"
    NONE = "none"


class CornerCaseKind(str, Enum):
    LARGE = "large"
    ZERO = "zero"
    NEGATIVE = "negative"
    NAN = "nan"
    NONE = "none"
    EMPTY = "empty"
    NON_ASCII = "non-ascii"


class Source(str, Enum):
    DOCS = "docs"
    REPOS = "repos"
    DEV_TESTS = "dev-tests"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class CornerConfig:
    """Corner constants used by the substitution rules. All overridable."""

    large_int: int = 2**62
    large_real: float = 1e38
    large_extent: int = 2**31
    negative_int: int = -(2**31)
    negative_real: float = float(-(2**31))
    negative_extent: int = -(2**31)
    non_ascii: str = "\U0001f600" * 8
    min_extent: int = 2
    max_extent: int = 8

    def to_dict(self) -> dict:
        return {
            "large_int": self.large_int,
            "large_real": self.large_real,
            "large_extent": self.large_extent,
            "negative_int": self.negative_int,
            "negative_real": self.negative_real,
            "negative_extent": self.negative_extent,
            "non_ascii": self.non_ascii,
            "min_extent": self.min_extent,
            "max_extent": self.max_extent,
        }

    @staticmethod
    def from_dict(data: dict) -> "CornerConfig":
        defaults = CornerConfig()
        known = defaults.to_dict()
        unknown = set(data) - set(known)
        if unknown:
            raise SchemaError(f"unknown corner config keys: {sorted(unknown)}")
        merged = {**known, **data}
        return CornerConfig(**merged)


@dataclass(frozen=True)
class Fill:
    """Scalar fill descriptor: a constant, or a uniform range expanded at render time."""

    dist: str = "const"
    value: Any = 0.0
    low: float = 0.0
    high: float = 1.0
    seed: int = 0

    @staticmethod
    def const(value: Any) -> "Fill":
        return Fill(dist="const", value=value)

    @staticmethod
    def uniform(low: float, high: float, seed: int) -> "Fill":
        return Fill(dist="uniform", value=None, low=low, high=high, seed=seed)

    def representative(self) -> float:
        """A single number standing in for the fill, for simulated math."""
        if self.dist == "uniform":
            return (self.low + self.high) / 2.0
        v = self.value
        if isinstance(v, bool):
            return 1.0 if v else 0.0
        if isinstance(v, (int, float)):
            return float(v)
        return 0.0


@dataclass(frozen=True)
class TensorValue:
    fill: Fill
    shape: tuple[int, ...]
    dtype: DType

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(e) for e in self.shape))

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def element_count(self) -> int:
        # product of extents; 0 if any extent is 0; meaningful pre-mutation
        return math.prod(self.shape)

    def with_shape(self, shape: Iterable[int]) -> "TensorValue":
        return replace(self, shape=tuple(shape))

    def with_fill(self, fill: Fill) -> "TensorValue":
        return replace(self, fill=fill)


def rank(t: TensorValue) -> int:
    return t.rank


@dataclass(frozen=True)
class ParamValue:
    """One argument of a recorded invocation: a name, a position, and a
    tagged payload (tensor descriptor, scalar, nested list, or none)."""

    name: str
    position: int
    kind: ParamKind
    value: Any = None

    def __post_init__(self):
        k, v = self.kind, self.value
        if k is ParamKind.TENSOR and not isinstance(v, TensorValue):
            raise SchemaError(f"tensor param {self.name!r} needs a TensorValue payload")
        if k is ParamKind.INT and (isinstance(v, bool) or not isinstance(v, int)):
            raise SchemaError(f"int param {self.name!r} needs an int payload")
        if k is ParamKind.REAL and not isinstance(v, float):
            raise SchemaError(f"real param {self.name!r} needs a float payload")
        if k is ParamKind.BOOL and not isinstance(v, bool):
            raise SchemaError(f"bool param {self.name!r} needs a bool payload")
        if k is ParamKind.STR and not isinstance(v, str):
            raise SchemaError(f"str param {self.name!r} needs a str payload")
        if k is ParamKind.LIST:
            items = tuple(v) if v is not None else ()
            for item in items:
                if not isinstance(item, ParamValue):
                    raise SchemaError(f"list param {self.name!r} holds non-param items")
            object.__setattr__(self, "value", items)
        if k is ParamKind.NONE and v is not None:
            raise SchemaError(f"none param {self.name!r} carries a payload")

    @staticmethod
    def tensor(name: str, position: int, value: TensorValue) -> "ParamValue":
        return ParamValue(name, position, ParamKind.TENSOR, value)

    @staticmethod
    def integer(name: str, position: int, value: int) -> "ParamValue":
        return ParamValue(name, position, ParamKind.INT, value)

    @staticmethod
    def real(name: str, position: int, value: float) -> "ParamValue":
        return ParamValue(name, position, ParamKind.REAL, float(value))

    @staticmethod
    def boolean(name: str, position: int, value: bool) -> "ParamValue":
        return ParamValue(name, position, ParamKind.BOOL, value)

    @staticmethod
    def string(name: str, position: int, value: str) -> "ParamValue":
        return ParamValue(name, position, ParamKind.STR, value)

    @staticmethod
    def list_(name: str, position: int, items: Iterable["ParamValue"]) -> "ParamValue":
        return ParamValue(name, position, ParamKind.LIST, tuple(items))

    @staticmethod
    def none(name: str, position: int) -> "ParamValue":
        return ParamValue(name, position, ParamKind.NONE, None)

    def with_value(self, value: Any) -> "ParamValue":
        return replace(self, value=value)

    def as_kind(self, kind: ParamKind, value: Any) -> "ParamValue":
        """Same slot, new payload type. Type-changing mutations go through here."""
        return ParamValue(self.name, self.position, kind, value)


@dataclass(frozen=True)
class TestInput:
    """One fuzzable invocation: an API name plus its ordered arguments."""

    __test__ = False  # not a pytest class despite the name

    api_name: str
    params: tuple[ParamValue, ...]
    source: Source = Source.SYNTHETIC
    record_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        named = [p.name for p in self.params if p.name]
        if len(named) != len(set(named)):
            raise SchemaError(f"duplicate param names in {self.api_name}: {named}")


def corner_scalar(kind: CornerCaseKind, dtype: DType, config: CornerConfig = CornerConfig()) -> Any:
    """Corner constant of the given kind, shaped for the given dtype.

    Raises IllegalKindForType when the kind cannot inhabit the dtype
    (NaN needs a float or complex carrier, text kinds need strings).
    """
    if kind is CornerCaseKind.NONE:
        return None
    if kind is CornerCaseKind.NAN:
        if dtype.is_float or dtype.is_complex:
            return float("nan")
        raise IllegalKindForType(f"NaN has no {dtype.value} representation")
    if kind in (CornerCaseKind.EMPTY, CornerCaseKind.NON_ASCII):
        if dtype.is_string:
            return "" if kind is CornerCaseKind.EMPTY else config.non_ascii
        raise IllegalKindForType(f"{kind.value} has no {dtype.value} representation")
    if dtype.is_string:
        raise IllegalKindForType(f"{kind.value} has no string representation")
    numeric_real = dtype.is_float or dtype.is_complex
    if kind is CornerCaseKind.LARGE:
        return config.large_real if numeric_real else config.large_int
    if kind is CornerCaseKind.ZERO:
        return 0.0 if numeric_real else 0
    if kind is CornerCaseKind.NEGATIVE:
        return config.negative_real if numeric_real else config.negative_int
    raise IllegalKindForType(f"unhandled corner kind {kind!r}")


# --- serialization -------------------------------------------------------
#
# One JSON object per param: {"name", "pos", "kind", <payload>}. Tensors
# inline {"fill", "shape", "dtype"}. Special floats travel as the strings
# "NaN"/"Infinity"/"-Infinity" so every record stays strict JSON.


def _encode_scalar(v: Any) -> Any:
    if isinstance(v, float):
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
    return v


_SPECIAL_REALS = {"NaN": float("nan"), "Infinity": float("inf"), "-Infinity": float("-inf")}


def _decode_real(v: Any) -> float:
    if isinstance(v, str):
        if v in _SPECIAL_REALS:
            return _SPECIAL_REALS[v]
        raise SchemaError(f"not a real value: {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"not a real value: {v!r}")
    return float(v)


def _encode_fill(fill: Fill) -> Any:
    if fill.dist == "uniform":
        return {
            "dist": "uniform",
            "low": _encode_scalar(fill.low),
            "high": _encode_scalar(fill.high),
            "seed": fill.seed,
        }
    return _encode_scalar(fill.value)


def _decode_fill(data: Any, dtype: DType) -> Fill:
    if isinstance(data, dict):
        if data.get("dist") != "uniform":
            raise SchemaError(f"unknown fill descriptor: {data!r}")
        return Fill.uniform(_decode_real(data.get("low", 0.0)), _decode_real(data.get("high", 1.0)), int(data.get("seed", 0)))
    if dtype.is_string:
        if not isinstance(data, str):
            raise SchemaError(f"string tensor fill must be text, got {data!r}")
        return Fill.const(data)
    if dtype is DType.BOOL and isinstance(data, bool):
        return Fill.const(data)
    if dtype.is_float or dtype.is_complex:
        return Fill.const(_decode_real(data))
    if isinstance(data, bool) or not isinstance(data, (int, float)):
        raise SchemaError(f"numeric tensor fill must be a number, got {data!r}")
    return Fill.const(int(data) if isinstance(data, int) else data)


def param_to_dict(p: ParamValue) -> dict:
    out: dict[str, Any] = {"name": p.name, "pos": p.position, "kind": p.kind.value}
    if p.kind is ParamKind.TENSOR:
        t: TensorValue = p.value
        out["fill"] = _encode_fill(t.fill)
        out["shape"] = list(t.shape)
        out["dtype"] = t.dtype.value
    elif p.kind is ParamKind.LIST:
        out["items"] = [param_to_dict(item) for item in p.value]
    elif p.kind is ParamKind.NONE:
        pass
    elif p.kind is ParamKind.REAL:
        out["value"] = _encode_scalar(p.value)
    else:
        out["value"] = p.value
    return out


def param_from_dict(data: Any) -> ParamValue:
    if not isinstance(data, dict):
        raise SchemaError(f"param record must be an object, got {type(data).__name__}")
    try:
        name = data["name"]
        pos = data["pos"]
        kind = ParamKind(data["kind"])
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad param header: {exc}") from None
    if not isinstance(name, str) or isinstance(pos, bool) or not isinstance(pos, int):
        raise SchemaError(f"bad param header for {data!r}")
    if kind is ParamKind.TENSOR:
        try:
            dtype = DType(data["dtype"])
            shape = data["shape"]
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"bad tensor payload: {exc}") from None
        if not isinstance(shape, list) or any(isinstance(e, bool) or not isinstance(e, int) for e in shape):
            raise SchemaError(f"tensor shape must be a list of ints: {shape!r}")
        fill = _decode_fill(data.get("fill", 0), dtype)
        return ParamValue.tensor(name, pos, TensorValue(fill, tuple(shape), dtype))
    if kind is ParamKind.LIST:
        items = data.get("items", [])
        if not isinstance(items, list):
            raise SchemaError("list payload must carry an items array")
        return ParamValue.list_(name, pos, [param_from_dict(item) for item in items])
    if kind is ParamKind.NONE:
        return ParamValue.none(name, pos)
    if "value" not in data:
        raise SchemaError(f"{kind.value} param {name!r} has no value field")
    v = data["value"]
    if kind is ParamKind.INT:
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"int param {name!r} carries {v!r}")
        return ParamValue.integer(name, pos, v)
    if kind is ParamKind.REAL:
        return ParamValue.real(name, pos, _decode_real(v))
    if kind is ParamKind.BOOL:
        if not isinstance(v, bool):
            raise SchemaError(f"bool param {name!r} carries {v!r}")
        return ParamValue.boolean(name, pos, v)
    if not isinstance(v, str):
        raise SchemaError(f"str param {name!r} carries {v!r}")
    return ParamValue.string(name, pos, v)


def params_to_list(params: Iterable[ParamValue]) -> list[dict]:
    return [param_to_dict(p) for p in params]


def params_from_list(data: Any) -> tuple[ParamValue, ...]:
    if not isinstance(data, list):
        raise SchemaError("params must be an array")
    return tuple(param_from_dict(item) for item in data)


def canonical_json(obj: Any) -> str:
    """Stable text form used for hashing and equality: sorted keys, no spaces."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_id(api_name: str, params: Iterable[ParamValue]) -> str:
    import hashlib

    body = canonical_json({"api": api_name, "params": params_to_list(params)})
    return hashlib.sha256(body.encode()).hexdigest()[:16]


def test_input_to_dict(ti: TestInput) -> dict:
    return {
        "api": ti.api_name,
        "params": params_to_list(ti.params),
        "source": ti.source.value,
        "id": ti.record_id or content_id(ti.api_name, ti.params),
    }


def test_input_from_dict(data: Any) -> TestInput:
    if not isinstance(data, dict):
        raise SchemaError("record must be an object")
    api = data.get("api")
    if not isinstance(api, str) or not api:
        raise SchemaError("record needs a non-empty api field")
    try:
        source = Source(data.get("source", "synthetic"))
    except ValueError:
        raise SchemaError(f"unknown source tag {data.get('source')!r}") from None
    params = params_from_list(data.get("params", []))
    return TestInput(api, params, source, content_id(api, params))


def structurally_equal(a: ParamValue, b: ParamValue) -> bool:
    """Equality that treats NaN as equal to itself (via canonical text)."""
    return canonical_json(param_to_dict(a)) == canonical_json(param_to_dict(b))


def validate_roundtrip(p: ParamValue) -> ParamValue:
    """Encode, decode, and verify the decoded param is structurally identical."""
    try:
        text = json.dumps(param_to_dict(p), allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"unencodable param {p.name!r}: {exc}") from None
    decoded = param_from_dict(json.loads(text))
    if not structurally_equal(p, decoded):
        raise SerializationError(f"round-trip drift for param {p.name!r}")
    return decoded
