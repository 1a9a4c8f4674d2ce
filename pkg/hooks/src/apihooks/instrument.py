"""Live call instrumentation for seed harvesting.

``instrument("mockdl", out="seeds.jsonl")`` patches the target module's
public callables in place for the duration of the context and appends
one trace record per successful call to a JSONL file. Wrapping is
transparent: return values and raised exceptions pass through
untouched, and everything is restored on exit.

Calls are wrapped at import time by swapping module attributes (and,
for classes, the ``__init__`` slot, which keeps isinstance semantics
intact); target source on disk is never rewritten. A call that cannot
be recorded faithfully is logged and skipped, never surfaced into the
target's control flow. Only calls that return count as seeds; a raising
invocation is not a usable corpus entry.

The record writer is process-local and single-writer: one open handle,
one line per call, flushed as written.
"""

from __future__ import annotations

import functools
import importlib
import inspect
import logging
import types
from pathlib import Path
from typing import Any

from . import record

log = logging.getLogger("apihooks")


class Hooks:
    """Active instrumentation context. Use via instrument()."""

    def __init__(self, target: str | types.ModuleType, out: str | Path):
        self.target = target
        self.path = Path(out)
        self.records: list[dict] = []
        self.skipped = 0
        self._fh = None
        self._function_patches: list[tuple[types.ModuleType, str, Any]] = []
        self._init_patches: list[tuple[type, Any]] = []

    # -- bookkeeping -----------------------------------------------------

    def _emit(self, rec: dict) -> None:
        self._fh.write(record.canonical(rec) + "\n")
        self._fh.flush()
        self.records.append(rec)

    def _skip(self, api: str, reason: Exception) -> None:
        self.skipped += 1
        log.warning("no record for %s: %s", api, reason)

    # -- wrappers ----------------------------------------------------------

    def _wrap_function(self, module: types.ModuleType, name: str, fn) -> None:
        api = f"{module.__name__}.{name}"

        @functools.wraps(fn)
        def wrapped(*args, **kwargs):
            rec = None
            try:
                # encode before the call: the callee may mutate its arguments
                pairs = record.bind_call(fn, args, kwargs)
                rec = record.call_record(api, pairs)
            except Exception as exc:
                self._skip(api, exc)
            result = fn(*args, **kwargs)
            if rec is not None:
                self._emit(rec)
            return result

        wrapped.__hooked__ = fn
        setattr(module, name, wrapped)
        self._function_patches.append((module, name, fn))

    def _wrap_class(self, module: types.ModuleType, name: str, cls: type) -> None:
        api = f"{module.__name__}.{name}"
        original = cls.__init__
        if original is object.__init__:
            log.debug("%s has no own __init__, not wrapped", api)
            return

        @functools.wraps(original)
        def patched(obj, *args, **kwargs):
            rec = None
            try:
                pairs = record.bind_call(original, args, kwargs, skip_first=True)
                rec = record.call_record(api, pairs)
            except Exception as exc:
                self._skip(api, exc)
            original(obj, *args, **kwargs)
            if rec is not None:
                self._emit(rec)

        patched.__hooked__ = original
        cls.__init__ = patched
        self._init_patches.append((cls, original))

    # -- context -----------------------------------------------------------

    def __enter__(self) -> "Hooks":
        module = importlib.import_module(self.target) if isinstance(self.target, str) else self.target
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a")
        declared = getattr(module, "__all__", None)
        if declared is None:
            # without __all__, only wrap what the module itself defines
            declared = [
                n
                for n, obj in vars(module).items()
                if not n.startswith("_") and getattr(obj, "__module__", None) == module.__name__
            ]
        for name in sorted(declared):
            obj = getattr(module, name, None)
            if obj is None or getattr(obj, "__hooked__", None) is not None:
                continue
            try:
                if inspect.isclass(obj):
                    self._wrap_class(module, name, obj)
                elif callable(obj):
                    self._wrap_function(module, name, obj)
            except Exception as exc:
                self._skip(f"{module.__name__}.{name}", exc)
        return self

    def __exit__(self, *exc_info) -> None:
        for module, name, fn in reversed(self._function_patches):
            setattr(module, name, fn)
        for cls, original in reversed(self._init_patches):
            cls.__init__ = original
        self._function_patches.clear()
        self._init_patches.clear()
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def instrument(target: str | types.ModuleType, out: str | Path) -> Hooks:
    """Context manager recording every public call on ``target`` to ``out``."""
    return Hooks(target, out)
