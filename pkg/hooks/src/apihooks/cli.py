"""Command line front end.

Two subcommands: ``capture`` runs a target entry point under
instrumentation and writes harvested trace records, ``enumerate-apis``
walks a package for internal developer APIs. The runner shim is not a
subcommand; it stays ``python -m apihooks.runner`` so the spawned
process carries no argument-parsing baggage.
"""

from __future__ import annotations

import argparse
import importlib
import json
import runpy
import sys
from pathlib import Path

from . import devapi
from .instrument import instrument


def _cmd_capture(args) -> int:
    try:
        importlib.import_module(args.module)
    except ImportError as exc:
        print(f"error: cannot import target module {args.module!r}: {exc}", file=sys.stderr)
        return 1
    with instrument(args.module, out=args.out) as hooks:
        if args.call:
            mod_name, _, func_name = args.call.partition(":")
            func_name = func_name or "main"
            try:
                entry = getattr(importlib.import_module(mod_name), func_name)
            except (ImportError, AttributeError) as exc:
                print(f"error: cannot resolve {args.call!r}: {exc}", file=sys.stderr)
                return 1
            entry()
        else:
            runpy.run_path(args.run, run_name="__main__")
    print(f"captured {len(hooks.records)} record(s), {hooks.skipped} skipped -> {hooks.path}")
    return 0


def _cmd_enumerate(args) -> int:
    try:
        if args.root:
            report = devapi.enumerate_dev_apis(args.root, package=args.package)
        else:
            report = devapi.enumerate_package(args.package)
    except devapi.PackageNotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report.to_dict(), indent=1)
    if args.out and args.out != "-":
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apihooks", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capture", help="run a target entry point under instrumentation")
    p.add_argument("--module", required=True, help="module whose public calls get recorded")
    p.add_argument("--out", required=True, help="JSONL file for harvested records")
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--call", metavar="MOD:FUNC", help="import MOD and invoke FUNC under the hooks")
    how.add_argument("--run", metavar="FILE", help="exec a python file under the hooks")
    p.set_defaults(func=_cmd_capture)

    p = sub.add_parser("enumerate-apis", help="list internal developer APIs of a package")
    p.add_argument("--root", help="package source directory to walk")
    p.add_argument("--package", help="package name (defaults to the root's basename)")
    p.add_argument("--out", default="-", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_enumerate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "enumerate-apis" and not (args.root or args.package):
        print("error: need --root or --package", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
