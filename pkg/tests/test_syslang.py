from __future__ import annotations

from mlcforge.frontend import parse_system
from mlcforge.frontend.printer import pretty_print
from mlcforge.model import DaPredict, SendAction

SERVER = """
thing server {
  message image(px: Q(0:16)^{8,8,1})
  message result(digit: Int)
  port in image_recognition_service receives image
  port out reply sends result
  property digit: Int = 0
  ml {
    features p0 p1
    labels ON label
    dataset "data/d.csv"
    model_algorithm mlp {
      hidden_layer_sizes: (128)
    }
    training_results "out/train.log"
  }
  statechart {
    initial ready
    state ready {
      on image_recognition_service?image(px) / da_predict(px -> digit); reply!result(digit) -> ready
    }
  }
}
"""


def parse_ok(text: str):
    things, pipelines, diags = parse_system(text, "test.scl")
    assert not diags, [d.render() for d in diags]
    return things, pipelines


def test_receive_transition_with_predict_and_send():
    things, _ = parse_ok(SERVER)
    thing = things[0]
    t = thing.statechart.transitions[0]
    assert t.trigger is not None
    assert t.trigger.port == "image_recognition_service"
    assert t.trigger.message == "image"
    assert t.trigger.params == ("px",)
    assert isinstance(t.actions[0], DaPredict)
    assert t.actions[0].result == "digit"
    assert isinstance(t.actions[1], SendAction)
    assert t.actions[1].port == "reply" and t.actions[1].message == "result"


def test_labels_semi_mode():
    things, _ = parse_ok(
        'thing t { ml { features a labels SEMI y dataset "d.csv" model_algorithm mlp { } } '
        "statechart { initial s state s { } } }"
    )
    block = things[0].ml_block
    assert block is not None
    assert block.labels_mode == "SEMI"
    assert block.label_name == "y"


def test_labels_off_has_no_label():
    things, _ = parse_ok(
        'thing t { ml { features a labels OFF dataset "d.csv" model_algorithm mlp { } } '
        "statechart { initial s state s { } } }"
    )
    assert things[0].ml_block.labels_mode == "OFF"
    assert things[0].ml_block.label_name is None


def test_duplicate_state_reported():
    _, _, diags = parse_system(
        "thing t { statechart { initial ready state ready { } state ready { } } }",
        "dup.scl",
    )
    assert any(d.code == "sc-duplicate-state" for d in diags)


def test_thing_without_statechart_is_error():
    _, _, diags = parse_system("thing t { }", "missing.scl")
    assert any(d.code == "sc-missing" for d in diags)


def test_ml_block_requires_dataset_and_algorithm():
    _, _, diags = parse_system(
        "thing t { ml { features a labels OFF } statechart { initial s state s { } } }",
        "ml.scl",
    )
    messages = " | ".join(d.message for d in diags)
    assert "dataset" in messages and "model_algorithm" in messages


def test_guard_and_triggerless_transitions():
    things, _ = parse_ok(
        """
thing t {
  message m(v: Int)
  port in p receives m
  property x: Int = 0
  statechart {
    initial a
    state a {
      on p?m(v) [x == 0 && v > 2] / x := v + 1 -> b
    }
    state b {
      -> a
    }
  }
}
"""
    )
    chart = things[0].statechart
    assert chart.transitions[0].guard is not None
    assert chart.transitions[1].trigger is None and chart.transitions[1].actions == ()


def test_pipeline_with_instances_and_connectors():
    _, pipelines = parse_ok(
        """
pipeline p {
  instance a: thing t
  instance n: network Net(classes = 10)
  instance s: stub {
    in x: R(0:1)^{10}
    out y: Q(0:1)^{1}
  }
  connect n.out -> s.x
}
"""
    )
    pipe = pipelines[0]
    assert [i.kind for i in pipe.instances] == ["thing", "network", "stub"]
    assert pipe.instances[1].bindings == (("classes", 10),)
    assert pipe.connectors[0].src_instance == "n"


def test_duplicate_instance_reported():
    _, _, diags = parse_system(
        "pipeline p { instance a: thing t instance a: thing u }", "dup.scl"
    )
    assert any(d.code == "sys-duplicate-instance" for d in diags)


def test_round_trip_fixpoint():
    things, _ = parse_ok(SERVER)
    printed = pretty_print(things[0])
    things2, _, diags2 = parse_system(printed, "test.scl")
    assert not diags2, [d.render() for d in diags2]
    assert things2[0] == things[0]
    assert pretty_print(things2[0]) == printed
