"""Developer-API enumeration over a package's internal modules.

End-user APIs are documented; the interesting attack surface below them
is not. This walks a package source tree, keeps the modules whose
dotted path has an underscore component (the conventional "internal"
marker), lifts top-level definitions out of each file with a
syntax-tree visit, and then validates every candidate against the live
imported module. Names that exist only in the tree (guarded defs,
deleted aliases) are dropped: if it cannot be imported, it cannot be
fuzzed.

Output is deterministic for a fixed tree: files, entries, and errors
all come back sorted. Parse failures are collected per file instead of
aborting the walk.
"""

from __future__ import annotations

import ast
import importlib
import importlib.util
import sys
from dataclasses import dataclass
from pathlib import Path


class PackageNotFound(Exception):
    """Named package has no importable spec in this environment."""


@dataclass(frozen=True)
class DevApiEntry:
    """One internal definition that resolved to a live object."""

    name: str  # fully qualified, e.g. mockdl._internal.ops.row_select
    module: str  # parent module, e.g. mockdl._internal.ops
    dependency: str  # minimal import statement that makes the name resolvable
    is_callable: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "import": self.dependency,
            "callable": self.is_callable,
        }


@dataclass(frozen=True)
class EnumerationReport:
    package: str
    root: str
    entries: tuple[DevApiEntry, ...]
    errors: tuple[dict, ...]

    @property
    def count(self) -> int:
        return len(self.entries)

    def by_module(self) -> dict[str, list[DevApiEntry]]:
        grouped: dict[str, list[DevApiEntry]] = {}
        for e in self.entries:
            grouped.setdefault(e.module, []).append(e)
        return {m: grouped[m] for m in sorted(grouped)}

    def to_dict(self) -> dict:
        return {
            "package": self.package,
            "root": self.root,
            "count": self.count,
            "modules": {m: [e.to_dict() for e in es] for m, es in self.by_module().items()},
            "errors": [dict(e) for e in self.errors],
        }


def _dependency_statement(module: str) -> str:
    if "." in module:
        parent, leaf = module.rsplit(".", 1)
        return f"from {parent} import {leaf}"
    return f"import {module}"


def _module_name(package: str, rel: Path) -> str | None:
    parts = [package, *rel.with_suffix("").parts]
    if parts[-1] == "__init__":
        parts.pop()
    if any(p == "__pycache__" for p in parts):
        return None
    return ".".join(parts)


def _is_internal(module: str) -> bool:
    return any(part.startswith("_") for part in module.split("."))


def _top_level_defs(tree: ast.Module) -> list[str]:
    names = []
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            if not node.name.startswith("_"):
                names.append(node.name)
    return names


def enumerate_dev_apis(root: str | Path, package: str | None = None) -> EnumerationReport:
    """Enumerate internal definitions under a package directory.

    ``root`` is the package directory itself; the package name defaults
    to its basename. The parent directory is put on sys.path for the
    duration of the walk so live-object validation works on trees that
    are not installed.
    """
    root = Path(root).resolve()
    if not root.is_dir():
        raise PackageNotFound(f"not a package directory: {root}")
    package = package or root.name
    entries: list[DevApiEntry] = []
    errors: list[dict] = []

    path_entry = str(root.parent)
    added = path_entry not in sys.path
    if added:
        sys.path.insert(0, path_entry)
        importlib.invalidate_caches()
    try:
        for file in sorted(root.rglob("*.py"), key=lambda p: p.relative_to(root).as_posix()):
            rel = file.relative_to(root)
            module = _module_name(package, rel)
            if module is None or not _is_internal(module):
                continue
            try:
                tree = ast.parse(file.read_text(), filename=str(file))
            except SyntaxError as exc:
                errors.append({"file": rel.as_posix(), "error": f"line {exc.lineno}: {exc.msg}"})
                continue
            names = _top_level_defs(tree)
            if not names:
                continue
            try:
                live = importlib.import_module(module)
            except Exception as exc:
                errors.append({"file": rel.as_posix(), "error": f"import failed: {exc}"})
                continue
            dep = _dependency_statement(module)
            for name in names:
                obj = getattr(live, name, None)
                if obj is None:
                    continue  # syntax-tree ghost: defined in text, absent at runtime
                entries.append(DevApiEntry(f"{module}.{name}", module, dep, callable(obj)))
    finally:
        if added and sys.path and sys.path[0] == path_entry:
            sys.path.pop(0)

    entries.sort(key=lambda e: e.name)
    errors.sort(key=lambda e: e["file"])
    return EnumerationReport(package=package, root=str(root), entries=tuple(entries), errors=tuple(errors))


def enumerate_package(package: str) -> EnumerationReport:
    """Enumerate an installed package by name."""
    try:
        spec = importlib.util.find_spec(package)
    except (ImportError, ValueError) as exc:
        raise PackageNotFound(f"cannot resolve {package!r}: {exc}") from None
    if spec is None:
        raise PackageNotFound(f"no installed package named {package!r}")
    if spec.submodule_search_locations:
        root = Path(list(spec.submodule_search_locations)[0])
    elif spec.origin:
        root = Path(spec.origin).parent
    else:
        raise PackageNotFound(f"{package!r} has no source directory")
    return enumerate_dev_apis(root, package=package)
