"""Deterministic seed derivation for replayable campaigns.

Every random decision in the pipeline draws from a generator keyed by a
tuple of components (master seed, api, iteration, rule, ...) so any case
can be regenerated from its recorded key without replaying the run.
"""

from __future__ import annotations

import hashlib
import random

_SEP = b"\x1f"


def derive_seed(*parts: object) -> int:
    """Collapse a component tuple into a stable 64-bit seed."""
    h = hashlib.sha256()
    for part in parts:
        h.update(_SEP)
        h.update(str(part).encode("utf-8", "surrogatepass"))
    return int.from_bytes(h.digest()[:8], "big")


def make_rng(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))
