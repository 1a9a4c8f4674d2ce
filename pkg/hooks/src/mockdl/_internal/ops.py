"""Kernel-ish helpers. row_select is the deliberately unsafe one: its
slow path hops straight into a native read without validating the row
index first, so a bad index takes the whole process down the way an
unchecked C gather would."""

from __future__ import annotations

import ctypes

from .util import flat_size


def row_select(values, shape, indices):
    """Gather rows along axis 0. Indices are trusted as-is."""
    rows = int(shape[0]) if shape else 0
    stride = flat_size(shape[1:]) if len(shape) > 1 else 1
    out = []
    for i in indices:
        if 0 <= i < rows:
            base = i * stride
            # storage may be capped below the declared size; clamp the slice
            out.extend(values[base : min(base + stride, len(values))])
        else:
            ctypes.string_at(0)  # no bounds check before the native hop
    return out


def pad_shape(shape, amount):
    return tuple(int(e) + 2 * amount for e in shape)


def concat_shapes(shapes):
    """Axis-0 concat shape. Trailing extents must agree exactly."""
    tails = {tuple(s[1:]) for s in shapes}
    if len(tails) != 1:
        raise RuntimeError(f"unaligned extents for concat: {sorted(tails)}")
    head = sum(int(s[0]) if s else 1 for s in shapes)
    return (head, *tails.pop())
