from __future__ import annotations

from mlcforge.frontend import parse_network
from mlcforge.frontend.printer import pretty_print
from mlcforge.model import DefCall, GenericRef, LayerSpec

DETECTOR = """
component Detector<classes> {
  ports {
    in image: Q(0:255)^{28,28}
    out digit: Q(0:1)^{classes}
  }
  def conv(k, c) {
    Convolution(kernel=(k, k), channels=c)
    Relu
    Pooling(max, (2, 2), (2, 2))
  }
  net {
    image -> conv(5, 20) -> conv(5, 50) -> Flatten -> FullyConnected(500)
          -> Relu -> FullyConnected(classes) -> Softmax -> digit
  }
}
"""


def test_detector_parses_with_one_generic():
    archs, diags = parse_network(DETECTOR, "detector.nal")
    assert not diags, [d.render() for d in diags]
    assert len(archs) == 1
    arch = archs[0]
    assert arch.name == "Detector"
    assert arch.generics == ("classes",)
    assert arch.input_ports[0].tensor.dims == (28, 28)
    assert arch.output_ports[0].tensor.dims == (GenericRef("classes"),)
    assert arch.body_input == "image" and arch.body_output == "digit"
    assert isinstance(arch.body[0], DefCall) and arch.body[0].name == "conv"


def test_empty_file_reports_expected_component():
    archs, diags = parse_network("", "empty.nal")
    assert archs == []
    assert len(diags) == 1
    assert "expected 'component'" in diags[0].message


def test_missing_closing_brace_single_error_no_crash():
    source = "component X {\n  ports {\n    in a: Q(0:1)^{2}\n"
    archs, diags = parse_network(source, "broken.nal")
    assert archs == []
    errors = [d for d in diags if d.severity.value == "error"]
    assert len(errors) == 1
    # span sits at end of input
    assert errors[0].pos.line == 4


def test_positional_args_normalized_to_named():
    archs, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{4} out y: Q(0:1)^{2} } "
        "net { x -> FullyConnected(2) -> y } }",
        "a.nal",
    )
    assert not diags
    layer = archs[0].body[0]
    assert isinstance(layer, LayerSpec)
    assert layer.args == (("units", 2),)


def test_scalar_kernel_becomes_pair():
    archs, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{8,8,1} out y: Q(0:1)^{2} } "
        "net { x -> Convolution(kernel=3, channels=2) -> Flatten -> FullyConnected(2) -> y } }",
        "a.nal",
    )
    assert not diags
    conv = archs[0].body[0]
    assert conv.arg("kernel") == (3, 3)
    assert conv.arg("stride") == (1, 1)  # default
    assert conv.arg("padding") == "valid"


def test_wildcard_layer_parse_rejected():
    archs, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{4} out y: Q(0:1)^{2} } net { x -> Wildcard -> y } }",
        "a.nal",
    )
    assert any(d.code == "net-wildcard" for d in diags)


def test_dropout_rate_range_checked():
    _, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{4} out y: Q(0:1)^{2} } "
        "net { x -> Dropout(1.5) -> FullyConnected(2) -> y } }",
        "a.nal",
    )
    assert any("rate" in d.message for d in diags)


def test_unknown_generic_dimension_flagged():
    _, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{k} out y: Q(0:1)^{2} } net { x -> FullyConnected(2) -> y } }",
        "a.nal",
    )
    assert any(d.code == "net-unknown-generic" for d in diags)


def test_body_must_use_declared_ports():
    _, diags = parse_network(
        "component A { ports { in x: Q(0:1)^{4} out y: Q(0:1)^{2} } net { z -> FullyConnected(2) -> y } }",
        "a.nal",
    )
    assert any(d.code == "net-body-port" for d in diags)


def test_recovery_parses_second_component():
    source = "component Bad { ports { in x Q } }\ncomponent Good { ports { in a: Q(0:1)^{2} out b: Q(0:1)^{2} } net { a -> Relu -> b } }"
    archs, diags = parse_network(source, "two.nal")
    assert any(a.name == "Good" for a in archs)
    assert diags


def test_round_trip_fixpoint():
    archs, _ = parse_network(DETECTOR, "detector.nal")
    printed = pretty_print(archs[0])
    archs2, diags2 = parse_network(printed, "detector.nal")
    assert not diags2
    assert archs2[0] == archs[0]
    assert pretty_print(archs2[0]) == printed
