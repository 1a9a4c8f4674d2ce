"""Runner shim: execute one rendered case script as this process.

    python -m apihooks.runner <script>

The host executor points its scripted backend here; the shim simply
becomes the case. Scripts carry their own verdict protocol (the
ORION::OK / ORION::EXC markers and the ORION-OUT block on stdout), so a
benign case exits 0 with markers printed, a filtered rejection exits 0
with an EXC marker, and a hard fault in the target kills this process
with the genuine signal. No marker parsing happens here on purpose: the
shim must not outlive or reinterpret the case.
"""

from __future__ import annotations

import sys
from pathlib import Path


def run_script(path: str | Path) -> int:
    """Compile and exec a rendered script in this process."""
    script = Path(path)
    code = compile(script.read_text(), str(script), "exec")
    exec(code, {"__name__": "__main__", "__file__": str(script), "__builtins__": __builtins__})
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m apihooks.runner <script>", file=sys.stderr)
        return 2
    return run_script(argv[0])


if __name__ == "__main__":
    sys.exit(main())
