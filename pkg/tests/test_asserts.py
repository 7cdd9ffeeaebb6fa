from __future__ import annotations

from mlcforge.model import ConfigTree
from mlcforge.simulator import Assertion, Pattern, assert_trace, matches
from mlcforge.simulator.trace import Trace, TraceEvent


def event(seq, kind, thing, **details) -> TraceEvent:
    return TraceEvent(seq, seq, kind, thing, tuple((k, str(v)) for k, v in details.items()))


def trace_of(*events) -> Trace:
    t = Trace()
    for e in events:
        t.append(e)
    return t


TRACE = trace_of(
    event(1, "state_entered", "s", state="boot"),
    event(2, "action", "s", action="da_preprocess"),
    event(3, "action", "s", action="da_train"),
    event(4, "state_entered", "s", state="ready"),
    event(5, "prediction", "s", stored="7"),
    event(6, "state_entered", "s", state="ready"),
    event(7, "message_sent", "ui", port="display", message="result", arg_value="5"),
)


def pattern(**fields) -> Pattern:
    prepared = []
    for key, value in fields.items():
        if key == "args":
            prepared.append(("args", ConfigTree(tuple(value.items()))))
        else:
            prepared.append((key, value))
    return Pattern(tuple(prepared))


def test_pattern_matching_fields_and_args():
    e = TRACE.events[-1]
    assert matches(pattern(kind="message_sent", thing="ui", message="result"), e)
    assert matches(pattern(args={"value": 5}), e)
    assert not matches(pattern(args={"value": 6}), e)
    assert not matches(pattern(kind="prediction"), e)


def test_eventually_pass_and_fail():
    ok = assert_trace(TRACE, [Assertion("a", "eventually", pattern(kind="prediction"))])
    assert ok.ok and "matched at #5" in ok.results[0].detail
    bad = assert_trace(TRACE, [Assertion("a", "eventually", pattern(kind="prediction", thing="x"))])
    assert not bad.ok


def test_never_cites_first_violation():
    report = assert_trace(TRACE, [Assertion("n", "never", pattern(kind="state_entered"))])
    assert not report.ok
    assert "#1" in report.results[0].detail


def test_never_vacuous_pass():
    report = assert_trace(TRACE, [Assertion("n", "never", pattern(kind="message_received"))])
    assert report.ok


def test_order_first_before_first():
    ok = assert_trace(
        TRACE,
        [
            Assertion(
                "o", "order",
                pattern(kind="action", action="da_train"),
                pattern(kind="prediction"),
            )
        ],
    )
    assert ok.ok
    reversed_report = assert_trace(
        TRACE,
        [Assertion("o", "order", pattern(kind="prediction"), pattern(kind="action", action="da_train"))],
    )
    assert not reversed_report.ok
    assert "#3 precedes" in reversed_report.results[0].detail


def test_order_missing_pattern_reported():
    report = assert_trace(
        TRACE, [Assertion("o", "order", pattern(kind="ghost"), pattern(kind="prediction"))]
    )
    assert not report.ok and "first pattern never matched" in report.results[0].detail


def test_after_every_occurrence_followed():
    ok = assert_trace(
        TRACE,
        [Assertion("a", "after", pattern(kind="prediction"), pattern(kind="state_entered", state="ready"))],
    )
    assert ok.ok
    # an event with no later follower fails and is cited
    bad = assert_trace(
        TRACE,
        [Assertion("a", "after", pattern(kind="message_sent"), pattern(kind="state_entered"))],
    )
    assert not bad.ok and "#7" in bad.results[0].detail


def test_after_vacuous():
    report = assert_trace(
        TRACE, [Assertion("a", "after", pattern(kind="ghost"), pattern(kind="prediction"))]
    )
    assert report.ok and "vacuous" in report.results[0].detail


def test_report_tree_shape():
    report = assert_trace(TRACE, [Assertion("a1", "eventually", pattern(kind="prediction"))])
    tree = report.to_tree()
    assert tree.lookup("a1.passed") is True
