"""ultgen: unit-test scaffolding, case generation, and coverage advisor.

Given class sources in a small C++-like dialect, the toolchain generates
test fixture/test/mock scaffolding, fuzzes robustness test cases toward
condition/decision coverage, and recommends per-component coverage targets
from bug and commit history.
"""

__version__ = "0.1.0"
