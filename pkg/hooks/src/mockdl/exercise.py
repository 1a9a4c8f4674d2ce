"""Touch every public call once with well-formed arguments.

This is the trace-harvest entry point: run it under instrumentation and
every public API yields at least one recorded invocation.

    apihooks capture --module mockdl --call mockdl.exercise:main --out seeds.jsonl

Calls go through the module namespace on purpose; from-imports would
bypass the hooks.
"""

from __future__ import annotations

import mockdl


def main():
    mockdl.set_device("cpu")
    base = mockdl.full([4, 3], 1.5, dtype="float32")
    noise = mockdl.random_uniform([4, 3], 0.0, 1.0, seed=7, dtype="float32")
    picked = mockdl.lookup(base, [0, 2])
    padded = mockdl.pad(picked, 1)
    scaled = mockdl.scale(noise, 0.5)
    joined = mockdl.concat([base, scaled])
    direct = mockdl.Tensor([2], "float64", [3.0, 4.0])
    return {
        "base": base,
        "noise": noise,
        "picked": picked,
        "padded": padded,
        "scaled": scaled,
        "joined": joined,
        "direct": direct,
    }


if __name__ == "__main__":
    out = main()
    for name, t in out.items():
        print(f"{name}: {t!r}")
