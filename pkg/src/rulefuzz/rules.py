"""Mutation rule catalog.

Fourteen rules in two categories. Guided rules (R1-R5) break the
relationship between an argument and a companion argument; corner rules
(R6-R14) substitute extreme values into a single argument. Every rule is
pure: same inputs and seed, same output, inputs untouched.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .values import (
    CornerCaseKind,
    CornerConfig,
    Fill,
    IllegalKindForType,
    ParamKind,
    ParamValue,
    TensorValue,
    corner_scalar,
)

GUIDED = "guided"
CORNER = "corner"


class NotApplicable(Exception):
    """Rule cannot fire on this argument slice."""


@dataclass(frozen=True)
class MutationNote:
    """Replay record for one rule application."""

    rule_id: str
    params: tuple[str, ...]
    before: str
    after: str
    seed: int
    kind: str | None = None

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_id,
            "params": list(self.params),
            "before": self.before,
            "after": self.after,
            "seed": self.seed,
            "kind": self.kind,
        }

    @staticmethod
    def from_dict(data: dict) -> "MutationNote":
        return MutationNote(
            rule_id=data["rule"],
            params=tuple(data["params"]),
            before=data["before"],
            after=data["after"],
            seed=data["seed"],
            kind=data.get("kind"),
        )


def describe(p: ParamValue) -> str:
    if p.kind is ParamKind.TENSOR:
        t: TensorValue = p.value
        fill = t.fill.value if t.fill.dist == "const" else f"U({t.fill.low},{t.fill.high})"
        return f"tensor{list(t.shape)}:{t.dtype.value}:fill={fill!r}"
    if p.kind is ParamKind.LIST:
        inner = ",".join(describe(e) for e in p.value[:4])
        if len(p.value) > 4:
            inner += ",..."
        return f"list[{len(p.value)}]({inner})"
    if p.kind is ParamKind.NONE:
        return "none"
    return f"{p.kind.value}:{p.value!r}"


# --- value-level operations ----------------------------------------------


def _expand(shape: tuple[int, ...]) -> tuple[int, ...]:
    # append an axis of extent 1, then bump it so element counts shift too
    return shape + (2,)


def _reduce(shape: tuple[int, ...]) -> tuple[int, ...]:
    return shape[:-1]


def shape_mismatch(t_i: TensorValue, t_j: TensorValue, rng: random.Random) -> tuple[TensorValue, TensorValue]:
    """Opposite rank changes on a tensor pair so the shapes disagree.

    One side is picked at random for expansion, the other gets reduction;
    rank-0 tensors cannot lose an axis, so reduction falls back to the
    expansion path there. A final guard perturbs until inequality holds.
    """
    expand_first = bool(rng.getrandbits(1))

    def reduced(shape: tuple[int, ...]) -> tuple[int, ...]:
        return _reduce(shape) if shape else _expand(shape)

    if expand_first:
        s_i, s_j = _expand(t_i.shape), reduced(t_j.shape)
    else:
        s_i, s_j = reduced(t_i.shape), _expand(t_j.shape)
    while s_i == s_j:
        s_i = (s_i[:-1] + (s_i[-1] + 1,)) if s_i else (1,)
    return t_i.with_shape(s_i), t_j.with_shape(s_j)


def _invalid_axis_pool(t: TensorValue) -> list[int]:
    avoid = set(range(t.rank + 1)) | set(t.shape)
    hi = t.rank + max((abs(e) for e in t.shape), default=0) + 8
    pool = [c for c in range(-4, hi + 1) if c not in avoid]
    return pool or [hi + 1]


def dim_mismatch(t: TensorValue, a: int, rng: random.Random) -> tuple[TensorValue, int]:
    """New integer outside {0..rank} and outside the extent set."""
    return t, rng.choice(_invalid_axis_pool(t))


def _int_elem(v: int, pos: int, name: str = "") -> ParamValue:
    return ParamValue.integer(name, pos, v)


def _append_elem(items: tuple[ParamValue, ...]) -> tuple[ParamValue, ...]:
    if items:
        return items + (replace(items[-1], position=len(items)),)
    return (_int_elem(0, 0),)


def list_indices_mismatch(
    t: TensorValue, items: tuple[ParamValue, ...], rng: random.Random
) -> tuple[TensorValue, tuple[ParamValue, ...]]:
    """Resize the list so its length disagrees with the tensor rank."""
    n = len(items)
    targets = [c for c in (n - 1, n + 1) if c >= 0 and c != t.rank]
    if not targets:
        targets = [n + 2]
    goal = rng.choice(targets)
    out = items
    while len(out) > goal:
        out = out[:-1]
    while len(out) < goal:
        out = _append_elem(out)
    return t, out


def list_elem_mismatch(
    t: TensorValue, items: tuple[ParamValue, ...], rng: random.Random
) -> tuple[TensorValue, tuple[ParamValue, ...]]:
    """Swap one element for an integer outside the tensor's valid axis/extent set."""
    v = rng.choice(_invalid_axis_pool(t))
    if not items:
        return t, (_int_elem(v, 0),)
    idx = rng.randrange(len(items))
    old = items[idx]
    new = ParamValue(old.name, old.position, ParamKind.INT, v)
    return t, items[:idx] + (new,) + items[idx + 1 :]


def list_len_mismatch(
    l_i: tuple[ParamValue, ...], l_j: tuple[ParamValue, ...], rng: random.Random
) -> tuple[tuple[ParamValue, ...], tuple[ParamValue, ...]]:
    """Grow one list until the pair's lengths disagree."""
    grow_first = bool(rng.getrandbits(1))
    if grow_first:
        l_i = _append_elem(l_i)
        while len(l_i) == len(l_j):
            l_i = _append_elem(l_i)
    else:
        l_j = _append_elem(l_j)
        while len(l_i) == len(l_j):
            l_j = _append_elem(l_j)
    return l_i, l_j


def tensor_value_corner(t: TensorValue, kind: CornerCaseKind, config: CornerConfig) -> TensorValue:
    return t.with_fill(Fill.const(corner_scalar(kind, t.dtype, config)))


_EXTENT_CORNERS = {
    CornerCaseKind.LARGE: lambda c: c.large_extent,
    CornerCaseKind.NEGATIVE: lambda c: c.negative_extent,
    CornerCaseKind.ZERO: lambda c: 0,
}


def tensor_shape_corner(
    t: TensorValue, axis_role: str, kind: CornerCaseKind, config: CornerConfig
) -> TensorValue:
    if t.rank == 0:
        raise NotApplicable("rank-0 tensor has no extents")
    if kind not in _EXTENT_CORNERS:
        raise IllegalKindForType(f"{kind.value} is not an extent corner")
    extent = _EXTENT_CORNERS[kind](config)
    idx = 0 if axis_role == "first" else t.rank - 1
    shape = t.shape[:idx] + (extent,) + t.shape[idx + 1 :]
    return t.with_shape(shape)


def to_scalar(t: TensorValue) -> TensorValue:
    return t.with_shape(())


def from_scalar(t: TensorValue, rng: random.Random, config: CornerConfig) -> TensorValue:
    lo, hi = config.min_extent, config.max_extent
    return t.with_shape((rng.randint(lo, hi), rng.randint(lo, hi)))


def numeric_arg_corner(p: ParamValue, kind: CornerCaseKind, config: CornerConfig) -> ParamValue:
    if p.kind not in (ParamKind.INT, ParamKind.REAL):
        raise NotApplicable(f"{p.kind.value} is not a numeric argument")
    is_real = p.kind is ParamKind.REAL
    if kind is CornerCaseKind.LARGE:
        return p.with_value(config.large_real if is_real else config.large_int)
    if kind is CornerCaseKind.ZERO:
        return p.with_value(0.0 if is_real else 0)
    if kind is CornerCaseKind.NEGATIVE:
        return p.with_value(config.negative_real if is_real else config.negative_int)
    if kind is CornerCaseKind.NAN:
        return p.as_kind(ParamKind.REAL, float("nan"))
    if kind is CornerCaseKind.NONE:
        return p.as_kind(ParamKind.NONE, None)
    if kind is CornerCaseKind.EMPTY:
        return p.as_kind(ParamKind.STR, "")
    return p.as_kind(ParamKind.STR, config.non_ascii)


def bool_arg_corner(p: ParamValue, kind: CornerCaseKind, config: CornerConfig) -> ParamValue:
    if p.kind is not ParamKind.BOOL:
        raise NotApplicable(f"{p.kind.value} is not a boolean argument")
    if kind is CornerCaseKind.LARGE:
        return p.as_kind(ParamKind.INT, config.large_int)
    if kind is CornerCaseKind.NEGATIVE:
        return p.as_kind(ParamKind.INT, config.negative_int)
    raise IllegalKindForType(f"{kind.value} is not a boolean corner")


def string_arg_corner(p: ParamValue, kind: CornerCaseKind, config: CornerConfig) -> ParamValue:
    if p.kind is not ParamKind.STR:
        raise NotApplicable(f"{p.kind.value} is not a string argument")
    if kind is CornerCaseKind.EMPTY:
        return p.with_value("")
    if kind is CornerCaseKind.NON_ASCII:
        return p.with_value(config.non_ascii)
    raise IllegalKindForType(f"{kind.value} is not a string corner")


def _corner_element(old: ParamValue, kind: CornerCaseKind, config: CornerConfig) -> ParamValue:
    if old.kind in (ParamKind.INT, ParamKind.REAL):
        try:
            return numeric_arg_corner(old, kind, config)
        except NotApplicable:  # pragma: no cover - kinds guarded above
            pass
    if kind is CornerCaseKind.LARGE:
        return old.as_kind(ParamKind.INT, config.large_int)
    if kind is CornerCaseKind.ZERO:
        return old.as_kind(ParamKind.INT, 0)
    if kind is CornerCaseKind.NEGATIVE:
        return old.as_kind(ParamKind.INT, config.negative_int)
    if kind is CornerCaseKind.NAN:
        return old.as_kind(ParamKind.REAL, float("nan"))
    if kind is CornerCaseKind.NONE:
        return old.as_kind(ParamKind.NONE, None)
    return old.as_kind(ParamKind.STR, config.non_ascii)


def list_corner(
    items: tuple[ParamValue, ...], kind: CornerCaseKind, rng: random.Random, config: CornerConfig
) -> tuple[ParamValue, ...]:
    """Replace one element with a corner value; the Empty kind empties the list."""
    if kind is CornerCaseKind.EMPTY:
        return ()
    if not items:
        raise NotApplicable("empty list only supports the empty corner")
    idx = rng.randrange(len(items))
    return items[:idx] + (_corner_element(items[idx], kind, config),) + items[idx + 1 :]


# --- corner kind menus ----------------------------------------------------


def fill_corner_kinds(dtype) -> tuple[CornerCaseKind, ...]:
    if dtype.is_string:
        return ()
    kinds = [CornerCaseKind.LARGE, CornerCaseKind.ZERO, CornerCaseKind.NEGATIVE]
    if dtype.is_float or dtype.is_complex:
        kinds.append(CornerCaseKind.NAN)
    return tuple(kinds)


EXTENT_KINDS = (CornerCaseKind.LARGE, CornerCaseKind.NEGATIVE, CornerCaseKind.ZERO)
ALL_KINDS = tuple(CornerCaseKind)
BOOL_KINDS = (CornerCaseKind.LARGE, CornerCaseKind.NEGATIVE)
STRING_KINDS = (CornerCaseKind.EMPTY, CornerCaseKind.NON_ASCII)


def _pick(rng: random.Random, kinds: Sequence[CornerCaseKind]) -> CornerCaseKind:
    return kinds[rng.randrange(len(kinds))]


# --- rule wrappers ---------------------------------------------------------

ApplyFn = Callable[
    [Sequence[ParamValue], tuple[int, ...], random.Random, CornerConfig],
    tuple[dict[int, ParamValue], str | None],
]


@dataclass(frozen=True)
class MutationRule:
    """One catalog entry: identity, applicability, and the bound mutator."""

    id: str
    category: str
    description: str
    anchor: frozenset
    partner: frozenset | None
    symmetric: bool
    _apply: ApplyFn
    _anchor_ok: Callable[[ParamValue], bool] | None = None
    _partner_ok: Callable[[ParamValue], bool] | None = None

    @property
    def arity(self) -> int:
        return 1 if self.partner is None else 2

    def anchor_ok(self, p: ParamValue) -> bool:
        if p.kind not in self.anchor:
            return False
        return self._anchor_ok(p) if self._anchor_ok else True

    def partner_ok(self, p: ParamValue) -> bool:
        if self.partner is None or p.kind not in self.partner:
            return False
        return self._partner_ok(p) if self._partner_ok else True

    def apply(
        self,
        params: Sequence[ParamValue],
        idx: tuple[int, ...],
        rng: random.Random,
        config: CornerConfig,
        seed: int,
    ) -> tuple[tuple[ParamValue, ...], MutationNote]:
        """Apply to the slots in idx; returns the full new param tuple + note."""
        replaced, kind = self._apply(params, idx, rng, config)
        out = list(params)
        for i, new in replaced.items():
            out[i] = new
        note = MutationNote(
            rule_id=self.id,
            params=tuple(params[i].name or f"@{params[i].position}" for i in idx),
            before=" | ".join(describe(params[i]) for i in idx),
            after=" | ".join(describe(out[i]) for i in idx),
            seed=seed,
            kind=kind,
        )
        return tuple(out), note

    def catalog_entry(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "arity": self.arity,
            "anchor": sorted(k.value for k in self.anchor),
            "partner": sorted(k.value for k in self.partner) if self.partner else None,
            "description": self.description,
        }


def _tensor(p: ParamValue) -> TensorValue:
    return p.value


def _apply_r1(params, idx, rng, config):
    i, j = idx
    a, b = shape_mismatch(_tensor(params[i]), _tensor(params[j]), rng)
    return {i: params[i].with_value(a), j: params[j].with_value(b)}, None


def _apply_r2(params, idx, rng, config):
    i, j = idx
    _, a = dim_mismatch(_tensor(params[i]), params[j].value, rng)
    return {j: params[j].with_value(a)}, None


def _apply_r3(params, idx, rng, config):
    i, j = idx
    _, items = list_indices_mismatch(_tensor(params[i]), params[j].value, rng)
    return {j: params[j].with_value(items)}, None


def _apply_r4(params, idx, rng, config):
    i, j = idx
    _, items = list_elem_mismatch(_tensor(params[i]), params[j].value, rng)
    return {j: params[j].with_value(items)}, None


def _apply_r5(params, idx, rng, config):
    i, j = idx
    a, b = list_len_mismatch(params[i].value, params[j].value, rng)
    return {i: params[i].with_value(a), j: params[j].with_value(b)}, None


def _apply_r6(params, idx, rng, config):
    (i,) = idx
    t = _tensor(params[i])
    kinds = fill_corner_kinds(t.dtype)
    if not kinds:
        raise NotApplicable("no fill corner for this dtype")
    kind = _pick(rng, kinds)
    return {i: params[i].with_value(tensor_value_corner(t, kind, config))}, kind.value


def _shape_corner_apply(axis_role):
    def inner(params, idx, rng, config):
        (i,) = idx
        kind = _pick(rng, EXTENT_KINDS)
        t = tensor_shape_corner(_tensor(params[i]), axis_role, kind, config)
        return {i: params[i].with_value(t)}, kind.value

    return inner


def _apply_r9(params, idx, rng, config):
    (i,) = idx
    return {i: params[i].with_value(to_scalar(_tensor(params[i])))}, None


def _apply_r10(params, idx, rng, config):
    (i,) = idx
    return {i: params[i].with_value(from_scalar(_tensor(params[i]), rng, config))}, None


def _apply_r11(params, idx, rng, config):
    (i,) = idx
    kind = _pick(rng, ALL_KINDS)
    return {i: numeric_arg_corner(params[i], kind, config)}, kind.value


def _apply_r12(params, idx, rng, config):
    (i,) = idx
    kind = _pick(rng, BOOL_KINDS)
    return {i: bool_arg_corner(params[i], kind, config)}, kind.value


def _apply_r13(params, idx, rng, config):
    (i,) = idx
    kind = _pick(rng, STRING_KINDS)
    return {i: string_arg_corner(params[i], kind, config)}, kind.value


def _apply_r14(params, idx, rng, config):
    (i,) = idx
    items = params[i].value
    kinds = (CornerCaseKind.EMPTY,) if not items else ALL_KINDS
    kind = _pick(rng, kinds)
    return {i: params[i].with_value(list_corner(items, kind, rng, config))}, kind.value


_T = frozenset({ParamKind.TENSOR})
_L = frozenset({ParamKind.LIST})


def _int_list(p: ParamValue) -> bool:
    return all(e.kind is ParamKind.INT for e in p.value)


RULES: tuple[MutationRule, ...] = (
    MutationRule(
        "R1", GUIDED,
        "make two tensor arguments disagree in shape via opposite rank changes",
        _T, _T, True, _apply_r1,
    ),
    MutationRule(
        "R2", GUIDED,
        "set an integer argument outside the companion tensor's rank and extent set",
        _T, frozenset({ParamKind.INT}), False, _apply_r2,
    ),
    MutationRule(
        "R3", GUIDED,
        "make an index list's length disagree with the companion tensor's rank",
        _T, _L, False, _apply_r3,
    ),
    MutationRule(
        "R4", GUIDED,
        "replace an index-list element with a value outside the tensor's axes and extents",
        _T, _L, False, _apply_r4, _partner_ok=_int_list,
    ),
    MutationRule(
        "R5", GUIDED,
        "make two list arguments disagree in length",
        _L, _L, True, _apply_r5,
    ),
    MutationRule(
        "R6", CORNER,
        "replace a tensor's fill value with a large, zero, negative, or NaN constant",
        _T, None, False, _apply_r6,
        _anchor_ok=lambda p: bool(fill_corner_kinds(p.value.dtype)),
    ),
    MutationRule(
        "R7", CORNER,
        "replace the first shape extent with a large, negative, or zero extent",
        _T, None, False, _shape_corner_apply("first"),
        _anchor_ok=lambda p: p.value.rank >= 1,
    ),
    MutationRule(
        "R8", CORNER,
        "replace the last shape extent with a large, negative, or zero extent",
        _T, None, False, _shape_corner_apply("last"),
        _anchor_ok=lambda p: p.value.rank >= 1,
    ),
    MutationRule(
        "R9", CORNER,
        "collapse a tensor to a rank-0 scalar",
        _T, None, False, _apply_r9,
    ),
    MutationRule(
        "R10", CORNER,
        "reshape a tensor to a random rank-2 shape with small extents",
        _T, None, False, _apply_r10,
    ),
    MutationRule(
        "R11", CORNER,
        "replace a numeric argument with a corner value of any kind",
        frozenset({ParamKind.INT, ParamKind.REAL}), None, False, _apply_r11,
    ),
    MutationRule(
        "R12", CORNER,
        "replace a boolean argument with a large or negative integer",
        frozenset({ParamKind.BOOL}), None, False, _apply_r12,
    ),
    MutationRule(
        "R13", CORNER,
        "replace a string argument with an empty or non-ascii string",
        frozenset({ParamKind.STR}), None, False, _apply_r13,
    ),
    MutationRule(
        "R14", CORNER,
        "replace a list element with a corner value, or empty the list",
        _L, None, False, _apply_r14,
    ),
)

RULES_BY_ID: dict[str, MutationRule] = {r.id: r for r in RULES}

# anchor-kind lookup: the per-type tables the generator walks
TABLE: dict[ParamKind, tuple[MutationRule, ...]] = {
    kind: tuple(r for r in RULES if kind in r.anchor) for kind in ParamKind
}


def find_partner(params: Sequence[ParamValue], j: int, rule: MutationRule) -> int | None:
    """Partner slot for a pairwise rule anchored at j, or None.

    Symmetric rules only look forward so each unordered pair fires once;
    companion rules look forward first, then backward.
    """
    after = [k for k in range(j + 1, len(params)) if rule.partner_ok(params[k])]
    if after:
        return after[0]
    if rule.symmetric:
        return None
    before = [k for k in range(j - 1, -1, -1) if rule.partner_ok(params[k])]
    return before[0] if before else None


def rules_for(kinds: Sequence[ParamKind]) -> list[MutationRule]:
    """Rules applicable to a parameter-type signature, ascending by id.

    Pairwise rules appear only when the signature holds a compatible
    anchor/partner pair.
    """
    out = []
    for rule in RULES:
        if rule.arity == 1:
            if any(k in rule.anchor for k in kinds):
                out.append(rule)
            continue
        hit = False
        for j, k in enumerate(kinds):
            if k not in rule.anchor:
                continue
            others = list(kinds[j + 1 :]) if rule.symmetric else list(kinds[:j]) + list(kinds[j + 1 :])
            if any(o in rule.partner for o in others):
                hit = True
                break
        if hit:
            out.append(rule)
    return out


def catalog() -> list[dict]:
    return [r.catalog_entry() for r in RULES]
