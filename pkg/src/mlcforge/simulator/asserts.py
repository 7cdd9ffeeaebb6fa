"""Trace assertions: eventually / never / order / after.

- ``eventually(P)``: some event matches P.
- ``never(P)``: no event matches P.
- ``order(A, B)``: both occur and the first A precedes the first B.
- ``after(A, B)``: every occurrence of A is followed by a later B.

Reports cite the first violating or missing trace position.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import ConfigTree
from .scenario import Assertion, Pattern
from .trace import Trace, TraceEvent


def _value_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def matches(pattern: Pattern, event: TraceEvent) -> bool:
    for key, want in pattern.fields:
        if key == "args":
            assert isinstance(want, ConfigTree)
            for arg_key, arg_value in want.entries:
                got = event.detail(f"arg_{arg_key}")
                if got is None or got != _value_text(arg_value):
                    return False
            continue
        if key == "kind":
            if event.kind != str(want):
                return False
            continue
        if key == "thing":
            if event.thing != str(want):
                return False
            continue
        got = event.detail(key)
        if got is None or got != _value_text(want):
            return False
    return True


@dataclass(frozen=True)
class AssertionResult:
    name: str
    form: str
    passed: bool
    detail: str

    def render(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{status}  {self.name} ({self.form}): {self.detail}"


@dataclass(frozen=True)
class AssertReport:
    results: tuple[AssertionResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def render(self) -> str:
        return "\n".join(r.render() for r in self.results)

    def to_tree(self) -> ConfigTree:
        entries = []
        for r in self.results:
            entries.append(
                (
                    r.name,
                    ConfigTree(
                        (
                            ("form", r.form),
                            ("passed", r.passed),
                            ("detail", r.detail),
                        )
                    ),
                )
            )
        return ConfigTree(tuple(entries))


def _check(assertion: Assertion, trace: Trace) -> AssertionResult:
    events = list(trace)
    first_hits = [e.seq for e in events if matches(assertion.first, e)]
    if assertion.form == "eventually":
        if first_hits:
            return AssertionResult(assertion.name, "eventually", True, f"matched at #{first_hits[0]}")
        return AssertionResult(assertion.name, "eventually", False, "no matching event in trace")
    if assertion.form == "never":
        if first_hits:
            return AssertionResult(assertion.name, "never", False, f"forbidden event at #{first_hits[0]}")
        return AssertionResult(assertion.name, "never", True, "no matching event")
    assert assertion.then is not None
    then_hits = [e.seq for e in events if matches(assertion.then, e)]
    if assertion.form == "order":
        if not first_hits:
            return AssertionResult(assertion.name, "order", False, "first pattern never matched")
        if not then_hits:
            return AssertionResult(assertion.name, "order", False, "second pattern never matched")
        if first_hits[0] < then_hits[0]:
            return AssertionResult(
                assertion.name, "order", True, f"#{first_hits[0]} before #{then_hits[0]}"
            )
        return AssertionResult(
            assertion.name, "order", False,
            f"second pattern at #{then_hits[0]} precedes first at #{first_hits[0]}",
        )
    # after: every A followed by some B
    if not first_hits:
        return AssertionResult(assertion.name, "after", True, "vacuous (first pattern never matched)")
    for a_seq in first_hits:
        if not any(b > a_seq for b in then_hits):
            return AssertionResult(
                assertion.name, "after", False, f"event at #{a_seq} has no later match"
            )
    return AssertionResult(assertion.name, "after", True, f"{len(first_hits)} occurrence(s) all followed")


def assert_trace(trace: Trace, assertions: list[Assertion]) -> AssertReport:
    """Evaluate every assertion against a complete trace."""
    return AssertReport(tuple(_check(a, trace) for a in assertions))
