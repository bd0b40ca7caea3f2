import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armorparse.errors import AmbiguityError, DepthError, ParseError, TokenizeError
from armorparse.metaparser import parse_grammar, parse_manifest
from armorparse.nodes import (
    RuleNode,
    SubLangNode,
    TokenLeaf,
    ast_equal,
    from_json,
    skeleton,
    to_json,
)
from armorparse.parser import default_max_depth, parse
from armorparse.unparser import unparse


def tag_node(text):
    return RuleNode("Tag", 0, (TokenLeaf("TEXT", text),))


def tags(*texts):
    return RuleNode("Tags", 0, tuple(tag_node(t) for t in texts))


def test_two_tags(tag):
    assert parse("<a>,<b>", tag) == tags("a", "b")


def test_leaf_text_is_decoded(tag):
    assert parse("<a\\,b>", tag) == tags("a,b")
    assert parse(b"<a\\\\\\<>", tag) == tags("a\\<")


def test_two_level_composition(container, ct):
    expected = RuleNode("Body", 0, (
        RuleNode("Element", 0, (SubLangNode("TagsToken", "Tag", tags("x,y")),)),
    ))
    assert parse("{tags{<x\\,y>}}", container, ct) == expected


def test_outer_decode_runs_before_inner_parse(container, ct):
    # the space and brace in the tag body are only legal once the outer
    # table has been undone
    doc = "{tags{<a&#x0020;&#x007B;>}}"
    inner = parse(doc, container, ct).children[0].children[0].inner
    assert inner == tags("a {")


def test_empty_document(tag):
    with pytest.raises(ParseError, match="unexpected end of document, expected LT"):
        parse("", tag)


def test_error_position(tag):
    with pytest.raises(ParseError) as info:
        parse("<a>\n<b>>", tag)
    assert "parse error at token 3" in str(info.value)
    assert "(offset 3, 1:4)" in str(info.value)
    assert info.value.offset == 3


def test_trailing_input(tag):
    g = parse_grammar("grammar X { S = A; token A = 'a'; token B = 'b'; }")
    with pytest.raises(ParseError, match="expected end of document"):
        parse("ab", g)


def test_ambiguity_is_an_error():
    g = parse_grammar("grammar A { S = X | Y; X = T; Y = T; token T = 'a'; }")
    with pytest.raises(AmbiguityError, match="ambiguous derivation"):
        parse("a", g)


def test_ambiguous_repetition():
    g = parse_grammar("grammar A { S = T* T*; token T = 'a'; }")
    with pytest.raises(AmbiguityError):
        parse("aa", g)
    assert parse("", g) == RuleNode("S", 0, ())


def test_decode_error_inside_token(container, ct):
    with pytest.raises(ParseError, match="decode error in TagsToken at offset 6") as info:
        parse("{tags{&x}}", container, ct)
    assert info.value.offset == 6


def test_sub_parse_error_carries_context(container, ct):
    with pytest.raises(ParseError) as info:
        parse("{tags{<a>>}}", container, ct)
    assert info.value.context == ("Container.TagsToken@6",)
    assert str(info.value).startswith("Container.TagsToken@6: parse error at token 3")


def test_unbound_subparser_token(container):
    with pytest.raises(ParseError, match="unbound"):
        parse("{tags{<a>}}", container)


def test_invalid_utf8(tag):
    with pytest.raises(TokenizeError):
        parse(b"<\xc3>", tag)


def _nested(container, m, levels):
    doc = "{}"
    for _ in range(levels):
        inner = parse(doc, container, m, max_depth=levels + 2)
        outer = RuleNode("Body", 0, (RuleNode("Element", 0, (SubLangNode("TagsToken", "Container", inner),)),))
        doc = unparse(outer, container, m, max_depth=levels + 2)
    return doc


def test_recursion_depth_limit(container):
    m = parse_manifest("compose { Container.TagsToken -> Container; }", [container])
    doc = _nested(container, m, 4)
    assert parse(doc, container, m, max_depth=5).rule == "Body"
    with pytest.raises(DepthError, match=r"recursion depth exceeded \(limit 3\)"):
        parse(doc, container, m, max_depth=3)


def test_default_depth_and_environment(container, monkeypatch):
    monkeypatch.delenv("ARMORPARSE_MAX_DEPTH", raising=False)
    assert default_max_depth() == 32
    monkeypatch.setenv("ARMORPARSE_MAX_DEPTH", "2")
    assert default_max_depth() == 2
    m = parse_manifest("compose { Container.TagsToken -> Container; }", [container])
    doc = _nested(container, m, 3)
    with pytest.raises(DepthError):
        parse(doc, container, m)


def test_default_depth_stops_deep_self_embedding(container, monkeypatch):
    monkeypatch.delenv("ARMORPARSE_MAX_DEPTH", raising=False)
    m = parse_manifest("compose { Container.TagsToken -> Container; }", [container])
    doc = _nested(container, m, 33)
    with pytest.raises(DepthError, match="limit 32"):
        parse(doc, container, m)


def test_parse_is_pure(tag):
    assert parse("<a>,<b>", tag) == parse("<a>,<b>", tag)


def test_skeleton_examples():
    assert skeleton(tag_node("a")) == skeleton(tag_node("zzz"))
    assert skeleton(tags("a", "b")) != skeleton(tags("a", "b", "c"))


def test_ast_equal_examples():
    a = tags("a")
    assert ast_equal(a, a)
    assert not ast_equal(tag_node("a"), tag_node("b"))


def test_json_shape(ct, container):
    a = parse("{tags{<x\\,y>}}", container, ct)
    obj = json.loads(to_json(a))
    sub = obj["children"][0]["children"][0]
    assert sub["subparser"] == "TagsToken" and sub["grammar"] == "Tag"
    assert sub["ast"]["children"][0]["children"][0] == {"token": "TEXT", "text": "x,y"}
    assert obj["rule"] == "Body" and obj["alt"] == 0


@pytest.mark.parametrize("bad", ['{"rule": "A"}', "[]", '{"token": 1, "text": "a"}', "not json"])
def test_json_rejects_malformed(bad):
    with pytest.raises(ValueError):
        from_json(bad)


names = st.sampled_from(["A", "Tag", "TEXT", "x"])
trees = st.recursive(
    st.builds(TokenLeaf, names, st.text()),
    lambda kids: st.one_of(
        st.builds(lambda r, a, c: RuleNode(r, a, tuple(c)), names, st.integers(0, 5), st.lists(kids, max_size=3)),
        st.builds(SubLangNode, names, names, kids),
    ),
    max_leaves=10,
)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_json_round_trip(node):
    assert from_json(to_json(node)) == node
    assert from_json(to_json(node, indent=2)) == node
