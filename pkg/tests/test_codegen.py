from __future__ import annotations

import re

import pytest

from mlcforge.codegen import (
    UnsupportedCapability,
    generate_all,
    generate_component_stubs,
    generate_runtime_glue,
    get_backend,
)
from mlcforge.codegen.fileset import GeneratedFileSet, sanitize_identifier
from mlcforge.frontend import parse_system
from mlcforge.frontend.conflang import parse_config
from conftest import load_analyzed


def plan_text(analysis, unit: str) -> str:
    fileset = generate_all(analysis)
    return fileset.get(f"gen/train/{unit}/train.plan").content.decode()


def test_generation_is_deterministic(tmp_project):
    first, _ = load_analyzed(tmp_project)
    second, _ = load_analyzed(tmp_project)
    a = [(f.path, f.content) for f in generate_all(first).files]
    b = [(f.path, f.content) for f in generate_all(second).files]
    assert a == b


def test_mlp_plan_declares_expected_layer_sizes(demo_analysis):
    text = plan_text(demo_analysis, "daml_server")
    tree, diags = parse_config(text, "plan")
    assert not diags
    assert tree.lookup("model.input") == 64
    assert tree.lookup("model.hidden_sizes") == (128,)
    assert str(tree.lookup("model.output")) == "auto"
    assert str(tree.lookup("model.output_activation")) == "softmax"
    assert str(tree.lookup("train.loss")) == "categorical_crossentropy"


def test_network_plan_resolves_output_from_generics(demo_analysis):
    tree, _ = parse_config(plan_text(demo_analysis, "digits"), "plan")
    assert tree.lookup("model.input") == 64
    assert tree.lookup("model.output") == 10
    assert tree.lookup("model.hidden_sizes") == (128,)


def test_two_hidden_layers_from_hyperparams(tmp_path):
    root = tmp_path / "p"
    root.mkdir()
    (root / "mlc.project").write_text("project = two\n")
    (root / "d.csv").write_text("a,b,label\n1,2,0\n3,4,1\n")
    (root / "s.scl").write_text(
        """
thing t {
  ml {
    features a b
    labels ON label
    dataset "d.csv"
    model_algorithm mlp {
      hidden_layer_sizes: (128, 64)
      hidden_layers_activation_functions: (relu)
      standardize: true
    }
  }
  statechart { initial s state s { } }
}
"""
    )
    analysis, _ = load_analyzed(str(root))
    assert analysis.ok, [d.render() for d in analysis.diagnostics]
    tree, _ = parse_config(plan_text(analysis, "t"), "plan")
    assert tree.lookup("model.hidden_sizes") == (128, 64)
    # single activation entry broadcast across both hidden layers
    assert tree.lookup("model.activations") == tuple(
        tree.lookup("model.activations")[:1] * 2
    )


def test_manifest_lists_every_file(demo_analysis):
    fileset = generate_all(demo_analysis)
    manifest = fileset.get("gen/MANIFEST").content.decode()
    listed = {line.split("\t")[0] for line in manifest.strip().splitlines()}
    assert listed == {f.path for f in fileset.files if f.kind != "manifest"}


def test_convolution_rejected_by_reference_backend(tmp_path):
    root = tmp_path / "p"
    root.mkdir()
    (root / "mlc.project").write_text(
        "project = conv\ntrain.c.arch = Conv\ntrain.c.bind.classes = 2\n"
        "train.c.dataset = d.csv\ntrain.c.config = cfg\n"
    )
    (root / "d.csv").write_text(
        "p0,label\n" + "\n".join(f"{i},{i % 2}" for i in range(6)) + "\n"
    )
    (root / "cfg.tcl").write_text("standardize: true\n")
    (root / "n.nal").write_text(
        """
component Conv<classes> {
  ports { in x: Q(0:16)^{4,4,1} out y: R(0:1)^{classes} }
  net { x -> Convolution(kernel=(2,2), channels=2) -> Flatten -> FullyConnected(classes) -> Softmax -> y }
}
"""
    )
    analysis, _ = load_analyzed(str(root))
    # analysis accepts the CNN; the feature-count mismatch (16 pixels vs one
    # column) is irrelevant here, only capability checking is under test
    with pytest.raises(UnsupportedCapability) as err:
        generate_all(analysis)
    assert "Convolution" in str(err.value)


def test_semi_labels_rejected_by_reference_backend(tmp_path):
    root = tmp_path / "p"
    root.mkdir()
    (root / "mlc.project").write_text("project = semi\n")
    (root / "d.csv").write_text("a,label\n1,0\n2,1\n")
    (root / "s.scl").write_text(
        """
thing t {
  ml {
    features a
    labels SEMI label
    dataset "d.csv"
    model_algorithm mlp { standardize: true }
  }
  statechart { initial s state s { } }
}
"""
    )
    analysis, _ = load_analyzed(str(root))
    with pytest.raises(UnsupportedCapability) as err:
        generate_all(analysis)
    assert "SEMI" in str(err.value)


def test_every_da_action_has_one_bridge_call_site(demo_analysis):
    for thing in demo_analysis.unit.things:
        glue = generate_runtime_glue(thing).files[0].content.decode()
        da_count = sum(
            1
            for t in thing.statechart.transitions
            for a in t.actions
            if type(a).__name__ in ("DaPreprocess", "DaTrain", "DaPredict")
        )
        assert glue.count("rt.bridge.call(") == da_count


def test_no_identifier_collisions_in_glue(demo_analysis):
    pattern = re.compile(r"export (?:const|function|class) ([A-Za-z_][A-Za-z0-9_]*)")
    for thing in demo_analysis.unit.things:
        glue = generate_runtime_glue(thing).files[0].content.decode()
        names = pattern.findall(glue)
        assert len(names) == len(set(names)), names


def test_glue_for_single_state_thing():
    things, _, _ = parse_system(
        "thing lone { statechart { initial only state only { } } }", "x.scl"
    )
    glue = generate_runtime_glue(things[0]).files[0].content.decode()
    assert 'INITIAL_STATE = "only"' in glue
    assert "TRANSITIONS = [\n];" in glue


def test_glue_differs_only_in_name_derived_identifiers():
    src = """
thing NAME {
  message m(v: Int)
  port in p receives m
  statechart { initial a state a { on p?m(v) -> a } }
}
"""
    things_a, _, _ = parse_system(src.replace("NAME", "alpha"), "a.scl")
    things_b, _, _ = parse_system(src.replace("NAME", "beta"), "b.scl")
    glue_a = generate_runtime_glue(things_a[0]).files[0].content.decode()
    glue_b = generate_runtime_glue(things_b[0]).files[0].content.decode()
    assert glue_a != glue_b
    assert glue_a.replace("alpha", "beta") == glue_b


def test_stub_skeleton_has_typed_handlers(demo_analysis):
    pipeline = demo_analysis.unit.pipelines[0]
    fileset = generate_component_stubs(pipeline)
    adder = fileset.get("gen/stubs/adder/adder_stub.mjs").content.decode()
    assert "on_lhs(value)" in adder
    assert "on_rhs(value)" in adder
    assert "emit_total(value)" in adder
    assert "NotImplemented" in adder
    assert "R(0:1)^{10}" in adder


def test_zero_stubs_empty_fileset():
    _, pipelines, _ = parse_system(
        "thing t { statechart { initial s state s { } } }\n"
        "pipeline p { instance a: thing t }",
        "x.scl",
    )
    fileset = generate_component_stubs(pipelines[0])
    assert fileset.files == ()
    assert fileset.by_kind("stub-interface") == ()


def test_reserved_port_name_sanitized_with_mapping_comment():
    _, pipelines, _ = parse_system(
        "pipeline p { instance s: stub { in class: R(0:1)^{2} } }", "x.scl"
    )
    stub = generate_component_stubs(pipelines[0]).files[0].content.decode()
    assert "on_class_(value)" in stub
    assert "identifier mapping" in stub or "(port 'class')" in stub


def test_sanitize_identifier_rules():
    assert sanitize_identifier("plain") == ("plain", False)
    assert sanitize_identifier("class") == ("class_", True)
    assert sanitize_identifier("with-dash") == ("with_dash", True)


def test_duplicate_paths_rejected():
    from mlcforge.codegen.fileset import text_file

    with pytest.raises(ValueError):
        GeneratedFileSet((text_file("a", "x", "manifest"), text_file("a", "y", "manifest")))
