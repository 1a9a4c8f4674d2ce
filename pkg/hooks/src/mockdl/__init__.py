"""Miniature tensor library used as a fuzzing punching bag.

On well-formed inputs every call behaves like a polite numeric library.
Off the happy path it misbehaves on purpose, and the faults are real
process faults rather than simulated ones:

* ``lookup`` performs an unchecked native read for out-of-range indices
  (the process dies with SIGSEGV),
* ``pad`` trips a hard ``abort()`` when the amount overflows its 32-bit
  internal arithmetic (SIGABRT),
* ``scale`` and the constructors reject degenerate inputs with
  ``ValueError`` (the classic documented-validation path),
* ``concat`` leaks an internal ``RuntimeError`` on misaligned shapes.

Tensors materialize at most ``_CAP`` elements; the declared shape is
kept in full so astronomically large extents stay representable.
"""

from __future__ import annotations

import math
import os
import random

from ._internal import ops, util

__all__ = [
    "Tensor",
    "full",
    "random_uniform",
    "set_device",
    "lookup",
    "pad",
    "scale",
    "concat",
]

_CAP = 4096
_MAX_PAD = 2**31 - 1

_state = {"device": "cpu"}


class Tensor:
    """Dense tensor: full declared shape, bounded materialized values."""

    def __init__(self, shape, dtype, values):
        self.shape = tuple(int(e) for e in shape)
        self.dtype = util.normalize_dtype(dtype)
        self.values = [float(v) for v in values][:_CAP]

    @property
    def rank(self):
        return len(self.shape)

    @property
    def checksum(self):
        return util.checksum(self.values)

    def __repr__(self):
        return f"Tensor(shape={list(self.shape)}, dtype={self.dtype!r}, n={len(self.values)})"


def set_device(name):
    _state["device"] = str(name)


def _checked_shape(shape):
    out = []
    for e in shape:
        e = int(e)
        if e < 0:
            raise ValueError(f"negative extent {e}")
        out.append(e)
    return tuple(out)


def full(shape, value, dtype="float32"):
    """Constant tensor of the given shape."""
    shape = _checked_shape(shape)
    n = min(util.flat_size(shape), _CAP)
    return Tensor(shape, dtype, [float(value)] * n)


def random_uniform(shape, low, high, seed=0, dtype="float32"):
    """Uniform tensor; identical (shape, low, high, seed) means identical values."""
    shape = _checked_shape(shape)
    rng = random.Random(seed)
    n = min(util.flat_size(shape), _CAP)
    return Tensor(shape, dtype, [rng.uniform(low, high) for _ in range(n)])


def lookup(table, indices):
    """Gather rows of ``table`` by position.

    Indices are handed to the selector unvalidated; see ops.row_select.
    """
    idx = [int(i) for i in indices]
    out_shape = (len(idx), *table.shape[1:])
    return Tensor(out_shape, table.dtype, ops.row_select(table.values, table.shape, idx))


def pad(t, amount):
    """Grow every extent by ``amount`` on both sides, zero-filled."""
    if isinstance(amount, bool) or not isinstance(amount, int):
        raise ValueError("pad amount must be an int")
    if amount < 0:
        raise ValueError("pad amount must be non-negative")
    if amount > _MAX_PAD:
        os.abort()  # 32-bit arithmetic guard in the fast path traps
    shape = ops.pad_shape(t.shape, amount)
    n = min(util.flat_size(shape), _CAP)
    values = (list(t.values) + [0.0] * n)[:n]
    return Tensor(shape, t.dtype, values)


def scale(t, factor):
    """Multiply every element by a finite scalar."""
    if factor is None or not math.isfinite(factor):
        raise ValueError("scale factor must be a finite number")
    return Tensor(t.shape, t.dtype, [v * factor for v in t.values])


def concat(parts, axis=0):
    """Join tensors along axis 0."""
    tensors = list(parts)
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    if axis != 0:
        raise ValueError("only axis 0 is implemented")
    shape = ops.concat_shapes([t.shape for t in tensors])
    values = []
    for t in tensors:
        values.extend(t.values)
    return Tensor(shape, tensors[0].dtype, values[:_CAP])
