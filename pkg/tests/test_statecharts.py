from __future__ import annotations

from mlcforge.analysis import check_statechart
from mlcforge.frontend import parse_system

DAML_SERVER = """
thing daml_server {
  message image(px: Q(0:16)^{8,8,1})
  message recognized(digit: Int)
  port in image_recognition_service receives image
  port out reply sends recognized
  property digit: Int = 0
  ml {
    features p0
    labels ON label
    dataset "d.csv"
    model_algorithm mlp { }
  }
  statechart {
    initial boot
    state boot { / da_preprocess -> preprocessing }
    state preprocessing { / da_train -> training }
    state training { -> ready }
    state ready {
      on image_recognition_service?image(px) / da_predict(px -> digit); reply!recognized(digit) -> predicting
    }
    state predicting { -> ready }
  }
}
"""


def thing_of(source: str):
    things, _, diags = parse_system(source, "t.scl")
    assert things, [d.render() for d in diags]
    return things[0]


def codes(diags) -> set[str]:
    return {d.code for d in diags}


def test_daml_server_chart_clean():
    diags = check_statechart(thing_of(DAML_SERVER))
    assert diags == [], [d.render() for d in diags]


def test_unreachable_state_warned():
    thing = thing_of(
        """
thing t {
  statechart {
    initial a
    state a { }
    state island { }
  }
}
"""
    )
    diags = check_statechart(thing)
    assert codes(diags) == {"sc-unreachable"}
    assert all(d.severity.value == "warning" for d in diags)


def test_ml_action_without_ml_block():
    thing = thing_of("thing t { statechart { initial a state a { / da_train -> a } } }")
    assert "sc-ml-action" in codes(check_statechart(thing))


def test_undeclared_trigger_pair():
    thing = thing_of(
        """
thing t {
  message m(v: Int)
  port in p receives m
  statechart {
    initial a
    state a { on p?other(v) -> a }
  }
}
"""
    )
    assert "sc-unknown-message" in codes(check_statechart(thing))


def test_two_triggerless_transitions_rejected():
    thing = thing_of(
        "thing t { statechart { initial a state a { -> b [false] -> b } state b { } } }"
    )
    assert "sc-nondeterminism" in codes(check_statechart(thing))


def test_same_trigger_needs_guards():
    thing = thing_of(
        """
thing t {
  message m(v: Int)
  port in p receives m
  statechart {
    initial a
    state a {
      on p?m(v) -> a
      on p?m(v) [v > 0] -> a
    }
  }
}
"""
    )
    assert "sc-nondeterminism" in codes(check_statechart(thing))


def test_same_trigger_distinct_guards_accepted():
    thing = thing_of(
        """
thing t {
  message m(v: Int)
  port in p receives m
  statechart {
    initial a
    state a {
      on p?m(v) [v == 0] -> a
      on p?m(v) [v == 1] -> a
    }
  }
}
"""
    )
    assert check_statechart(thing) == []


def test_guard_must_be_boolean():
    thing = thing_of(
        """
thing t {
  message m(v: Int)
  port in p receives m
  statechart {
    initial a
    state a { on p?m(v) [v + 1] -> a }
  }
}
"""
    )
    assert "sc-guard-type" in codes(check_statechart(thing))


def test_send_arity_and_types_checked():
    thing = thing_of(
        """
thing t {
  message m(v: Int)
  message out_msg(v: Int, w: Bool)
  port in p receives m
  port out q sends out_msg
  statechart {
    initial a
    state a { on p?m(v) / q!out_msg(v) -> a }
  }
}
"""
    )
    assert "sc-arity" in codes(check_statechart(thing))


def test_assign_type_mismatch():
    thing = thing_of(
        """
thing t {
  property flag: Bool = false
  statechart {
    initial a
    state a { / flag := 3 -> a }
  }
}
"""
    )
    assert "sc-type" in codes(check_statechart(thing))


def test_unknown_name_in_expression():
    thing = thing_of(
        "thing t { property x: Int = 0 statechart { initial a state a { / x := ghost -> a } } }"
    )
    assert "sc-unknown-name" in codes(check_statechart(thing))


def test_transition_to_undeclared_state():
    thing = thing_of("thing t { statechart { initial a state a { -> nowhere } } }")
    assert "sc-unknown-state" in codes(check_statechart(thing))
