from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from mlcforge.frontend import parse_config
from mlcforge.frontend.printer import print_config_tree
from mlcforge.model import ConfigTree, EnumToken


def parse_ok(text: str) -> ConfigTree:
    tree, diags = parse_config(text, "test.tcl")
    assert tree is not None and not diags, [d.render() for d in diags]
    return tree


def test_nested_optimizer_block():
    tree = parse_ok("optimizer { type: adam learning_rate: 0.001 }")
    assert tree.lookup("optimizer.type") == EnumToken("adam")
    assert tree.lookup("optimizer.learning_rate") == 0.001


def test_singleton_list_value():
    tree = parse_ok("hidden_layer_sizes: (128)")
    assert tree.get("hidden_layer_sizes") == (128,)


def test_scalar_kinds():
    tree = parse_ok('a: 5\nb: 1.5\nc: "text"\nd: true\ne: token\nf: -3\ng: (1, 2.5, x)')
    assert tree.get("a") == 5
    assert tree.get("b") == 1.5
    assert tree.get("c") == "text"
    assert tree.get("d") is True
    assert tree.get("e") == EnumToken("token")
    assert tree.get("f") == -3
    assert tree.get("g") == (1, 2.5, EnumToken("x"))


def test_duplicate_key_cites_both_spans():
    tree, diags = parse_config("num_epoch: 5 num_epoch: 6", "dup.tcl")
    errors = [d for d in diags if d.code == "cfg-duplicate-key"]
    assert len(errors) == 1
    assert errors[0].related, "expected the first occurrence as a related span"
    # the first value wins
    assert tree.get("num_epoch") == 5


def test_empty_document_is_empty_tree():
    tree, diags = parse_config("", "empty.tcl")
    assert tree is not None and tree.entries == () and not diags


def test_comments_ignored():
    tree = parse_ok("// leading\nnum_epoch: 5 /* inline */\n// trailing")
    assert tree.get("num_epoch") == 5


def test_recovers_after_bad_entry():
    tree, diags = parse_config("bad: : 5\ngood: 1", "bad.tcl")
    assert any(d.code == "parse-expected" for d in diags)
    assert tree is not None and tree.get("good") == 1


_scalars = st.one_of(
    st.integers(min_value=-10**9, max_value=10**9),
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False),
    st.booleans(),
    st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=12),
    st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True).filter(
        lambda s: s not in ("true", "false")
    ).map(EnumToken),
)

_keys = st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True)


def _trees(depth: int = 2):
    values = st.one_of(_scalars, st.lists(_scalars, max_size=4).map(tuple))
    if depth > 0:
        values = st.one_of(values, st.deferred(lambda: _trees(depth - 1)))
    return st.dictionaries(_keys, values, max_size=5).map(
        lambda d: ConfigTree(tuple(d.items()))
    )


@given(_trees())
@settings(max_examples=60, deadline=None)
def test_print_parse_round_trip(tree: ConfigTree):
    printed = print_config_tree(tree)
    reparsed, diags = parse_config(printed, "round.tcl")
    assert not diags, [d.render() for d in diags] + [printed]
    assert reparsed == tree
