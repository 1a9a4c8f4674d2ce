"""Rule-driven API fuzzer.

Mutates recorded library invocations with a fixed catalog of heuristic
rules, executes the results against a simulated or scripted target, and
triages crashes, hangs, and cross-device output divergence.
"""

__version__ = "0.1.0"
