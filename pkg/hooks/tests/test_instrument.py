"""Wrapping semantics: transparent pass-through, faithful records,
clean restore, and the never-raise guarantee on recording failures."""

import json
import logging
import types

import pytest

from apihooks import instrument

MODULE_SOURCE = '''
__all__ = ["add", "boom", "echo", "Point"]

def add(a, b=2):
    return a + b

def boom(x):
    raise RuntimeError("boom")

def echo(cb):
    return cb

class Point:
    def __init__(self, x, y=0):
        self.x = x
        self.y = y
'''


@pytest.fixture
def mod():
    m = types.ModuleType("scratchmod")
    exec(MODULE_SOURCE, m.__dict__)
    return m


@pytest.fixture
def out(tmp_path):
    return tmp_path / "trace.jsonl"


class TestWrapping:
    def test_return_value_unchanged(self, mod, out):
        with instrument(mod, out):
            assert mod.add(1, 2) == 3

    def test_one_record_per_call(self, mod, out):
        with instrument(mod, out) as h:
            mod.add(1)
            mod.add(2, b=5)
        assert len(h.records) == 2
        assert [r["api"] for r in h.records] == ["scratchmod.add", "scratchmod.add"]

    def test_argument_names_bound(self, mod, out):
        with instrument(mod, out) as h:
            mod.add(7, b=9)
        params = h.records[0]["params"]
        assert [(p["name"], p["value"]) for p in params] == [("a", 7), ("b", 9)]

    def test_omitted_default_not_recorded(self, mod, out):
        with instrument(mod, out) as h:
            mod.add(7)
        assert [p["name"] for p in h.records[0]["params"]] == ["a"]

    def test_exceptions_propagate_and_leave_no_record(self, mod, out):
        with instrument(mod, out) as h:
            with pytest.raises(RuntimeError, match="boom"):
                mod.boom(1)
        assert h.records == []

    def test_unencodable_call_succeeds_unrecorded(self, mod, out, caplog):
        fn = lambda: None
        with caplog.at_level(logging.WARNING, logger="apihooks"):
            with instrument(mod, out) as h:
                assert mod.echo(fn) is fn
        assert h.records == []
        assert h.skipped == 1
        assert "scratchmod.echo" in caplog.text

    def test_class_init_records_and_keeps_identity(self, mod, out):
        cls_before = mod.Point
        with instrument(mod, out) as h:
            p = mod.Point(1, y=4)
            assert isinstance(p, mod.Point)
            assert mod.Point is cls_before  # the class object itself is untouched
        assert h.records[0]["api"] == "scratchmod.Point"
        assert [(q["name"], q["value"]) for q in h.records[0]["params"]] == [("x", 1), ("y", 4)]
        assert (p.x, p.y) == (1, 4)


class TestRestore:
    def test_functions_restored(self, mod, out):
        before = (mod.add, mod.boom, mod.echo, mod.Point.__init__)
        with instrument(mod, out):
            assert mod.add is not before[0]
        assert (mod.add, mod.boom, mod.echo, mod.Point.__init__) == before

    def test_calls_outside_context_leave_no_record(self, mod, out):
        mod.add(1)
        with instrument(mod, out) as h:
            pass
        mod.add(2)
        assert h.records == []
        assert out.read_text() == ""

    def test_restore_happens_on_error(self, mod, out):
        before = mod.add
        with pytest.raises(KeyboardInterrupt):
            with instrument(mod, out):
                raise KeyboardInterrupt
        assert mod.add is before

    def test_nested_instrumentation_records_once(self, mod, out, tmp_path):
        inner_out = tmp_path / "inner.jsonl"
        with instrument(mod, out) as outer:
            with instrument(mod, inner_out) as inner:
                mod.add(1)
            mod.add(2)
        assert len(outer.records) == 2
        assert inner.records == []  # already-hooked attrs are left alone


class TestOutput:
    def test_jsonl_lines_parse(self, mod, out):
        with instrument(mod, out) as h:
            mod.add(1)
            mod.Point(3)
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert [l["api"] for l in lines] == ["scratchmod.add", "scratchmod.Point"]
        assert lines == h.records

    def test_append_across_sessions(self, mod, out):
        with instrument(mod, out):
            mod.add(1)
        with instrument(mod, out):
            mod.add(2)
        assert len(out.read_text().splitlines()) == 2

    def test_flushed_while_context_open(self, mod, out):
        with instrument(mod, out):
            mod.add(1)
            assert len(out.read_text().splitlines()) == 1


class TestSelection:
    def test_without_all_only_own_defs_wrap(self, out):
        m = types.ModuleType("bare")
        exec("from math import sqrt\ndef local(x):\n    return x\n", m.__dict__)
        with instrument(m, out) as h:
            m.local(1)
            m.sqrt(4.0)
        assert [r["api"] for r in h.records] == ["bare.local"]

    def test_module_by_name(self, out):
        import mockdl

        with instrument("mockdl", out) as h:
            mockdl.set_device("cpu")
        assert h.records[0]["api"] == "mockdl.set_device"

    def test_data_attributes_ignored(self, out):
        m = types.ModuleType("datamod")
        exec("__all__ = ['VALUE']\nVALUE = 42\n", m.__dict__)
        with instrument(m, out) as h:
            pass
        assert m.VALUE == 42
        assert h.skipped == 0
