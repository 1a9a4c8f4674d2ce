"""Standalone encoder for the seed-store trace-record wire format.

An instrumented process should not drag the whole fuzzing toolchain
into the target's import space, so this module duplicates the record
field layout instead of importing it. The contract is one JSON object
per line:

    {"api", "params", "source", "id", "ts", "scope"}

with each param ``{"name", "pos", "kind", ...payload}`` and special
reals spelled "NaN"/"Infinity"/"-Infinity". Anything that cannot be
expressed faithfully raises Unencodable; callers drop the record, never
the call.

Tensor-shaped arguments (anything exposing shape and dtype) are
down-sampled at capture time: the record keeps the full declared shape
but replaces element storage with a fill descriptor, either a constant
or a [min, max] range summary, so record size is independent of tensor
size. Long homogeneous numeric sequences get the same treatment as 1-D
tensors.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import math
from datetime import datetime, timezone
from typing import Any, Iterable

SOURCE_TAG = "dev-tests"

MAX_LITERAL_ITEMS = 64

KNOWN_DTYPES = frozenset(
    {
        "float16",
        "float32",
        "float64",
        "int8",
        "int16",
        "int32",
        "int64",
        "uint8",
        "bool",
        "complex64",
        "string",
    }
)


class Unencodable(Exception):
    """Argument value with no faithful wire representation."""


def _encode_real(v: float):
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return v


def _fill_from_values(values: Iterable[Any]):
    """Constant when the data is constant, [min, max] range otherwise."""
    try:
        vals = [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise Unencodable(f"non-numeric tensor storage: {exc}") from None
    if not vals:
        return 0.0
    finite = [v for v in vals if math.isfinite(v)]
    if not finite:
        return _encode_real(vals[0])
    lo, hi = min(finite), max(finite)
    if lo == hi and len(finite) == len(vals):
        return _encode_real(lo)
    return {"dist": "uniform", "low": _encode_real(lo), "high": _encode_real(hi), "seed": 0}


def _tensor_param(name: str, pos: int, shape, dtype, values) -> dict:
    try:
        shape_list = [int(e) for e in shape]
    except (TypeError, ValueError) as exc:
        raise Unencodable(f"bad tensor shape: {exc}") from None
    dtype_name = str(dtype)
    if dtype_name not in KNOWN_DTYPES:
        raise Unencodable(f"unknown dtype {dtype_name!r}")
    fill = _fill_from_values(values) if values is not None else 0.0
    return {"name": name, "pos": pos, "kind": "tensor", "fill": fill, "shape": shape_list, "dtype": dtype_name}


def encode_value(name: str, pos: int, value: Any) -> dict:
    head = {"name": name, "pos": pos}
    if value is None:
        return {**head, "kind": "none"}
    if isinstance(value, bool):  # before int: bool is an int subtype
        return {**head, "kind": "bool", "value": value}
    if isinstance(value, int):
        return {**head, "kind": "int", "value": value}
    if isinstance(value, float):
        return {**head, "kind": "real", "value": _encode_real(value)}
    if isinstance(value, str):
        return {**head, "kind": "str", "value": value}
    if hasattr(value, "shape") and hasattr(value, "dtype"):
        return _tensor_param(name, pos, value.shape, value.dtype, getattr(value, "values", None))
    if isinstance(value, (list, tuple)):
        items = list(value)
        numeric = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in items)
        if len(items) > MAX_LITERAL_ITEMS:
            if not numeric:
                raise Unencodable(f"oversized mixed sequence ({len(items)} items)")
            dtype = "float64" if any(isinstance(x, float) for x in items) else "int64"
            return _tensor_param(name, pos, [len(items)], dtype, items)
        return {**head, "kind": "list", "items": [encode_value("", i, x) for i, x in enumerate(items)]}
    raise Unencodable(f"no wire representation for {type(value).__name__}")


def bind_call(fn, args: tuple, kwargs: dict, skip_first: bool = False) -> list[tuple[str, Any]]:
    """Ordered (name, value) pairs for one invocation.

    Uses the callable's signature when it has one; without a signature
    the positionals stay unnamed. Variadic parameters that actually
    received values are refused rather than flattened lossily.
    """
    try:
        sig = inspect.signature(fn)
    except (TypeError, ValueError):
        sig = None
    if sig is None:
        return [("", a) for a in args] + sorted(kwargs.items())
    params = list(sig.parameters.values())
    if skip_first:
        params = params[1:]
        sig = sig.replace(parameters=params)
    try:
        bound = sig.bind(*args, **kwargs)
    except TypeError as exc:
        raise Unencodable(f"arguments do not bind: {exc}") from None
    pairs: list[tuple[str, Any]] = []
    for name, value in bound.arguments.items():
        kind = sig.parameters[name].kind
        if kind in (inspect.Parameter.VAR_POSITIONAL, inspect.Parameter.VAR_KEYWORD):
            raise Unencodable(f"variadic parameter {name!r} in use")
        pairs.append((name, value))
    return pairs


def canonical(obj: Any) -> str:
    """Stable line form: sorted keys, no whitespace, strict JSON."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def scope_tag(api: str) -> str:
    parts = api.split(".")
    return "developer" if any(p.startswith("_") for p in parts) else "end-user"


def call_record(api: str, pairs: list[tuple[str, Any]], now: str | None = None) -> dict:
    params = [encode_value(name, i, value) for i, (name, value) in enumerate(pairs)]
    body = canonical({"api": api, "params": params})
    return {
        "api": api,
        "params": params,
        "source": SOURCE_TAG,
        "id": hashlib.sha256(body.encode()).hexdigest()[:16],
        "ts": now or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "scope": scope_tag(api),
    }
