"""Dtype and size bookkeeping shared by the public entry points."""

from __future__ import annotations

import math

_DTYPES = (
    "float16",
    "float32",
    "float64",
    "int8",
    "int16",
    "int32",
    "int64",
    "uint8",
    "bool",
)

_ALIASES = {"float": "float32", "double": "float64", "int": "int32", "long": "int64"}


def normalize_dtype(name):
    """Canonical dtype string; unknown names are a caller error."""
    text = str(name).lower()
    text = _ALIASES.get(text, text)
    if text not in _DTYPES:
        raise ValueError(f"unknown dtype {name!r}")
    return text


def flat_size(shape):
    """Element count of a shape; any zero extent collapses it to 0."""
    return math.prod(int(e) for e in shape)


def checksum(values):
    return float(sum(float(v) for v in values))
