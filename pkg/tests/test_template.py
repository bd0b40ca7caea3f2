import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armorparse import corpus
from armorparse.errors import ParseError, PathError, TemplateError
from armorparse.nodes import RuleNode, TokenLeaf, get_node, set_leaf, skeleton
from armorparse.parser import parse
from armorparse.template import instantiate, load_template, render, split_markers
from armorparse.unparser import unparse


def test_page_markers(page):
    t, _, _ = page
    assert t.markers == corpus.PAGE_MARKERS
    assert len(t.slots) == 8


def test_no_markers(tag):
    assert load_template("<a>", tag).slots == ()


def test_single_marker(tag):
    t = load_template("<#name#>", tag)
    assert [(s.marker, s.path, s.segment) for s in t.slots] == [("name", (0, 0), 0)]


def test_render_tag(tag):
    t = load_template("<#name#>", tag)
    assert render(t, {"name": "x"}, tag) == "<x>"
    assert render(t, {"name": "a,b"}, tag) == "<a\\,b>"


def test_onclick_line(page):
    t, html, m = page
    doc = render(t, {"name": ";alert(1)", "actionURL": "/r"}, html, m)
    assert corpus.onclick_before(doc, "Test1") == "alert('&quot;;alert(1)&quot;');"


def test_tag_body_is_entity_encoded(page):
    t, html, m = page
    doc = render(t, {"name": "<i>x</i>", "actionURL": "/r"}, html, m)
    assert "<p>&lt;i&gt;x&lt;/i&gt;</p>" in doc


def test_markers_inside_encoded_context(page):
    # the Test1 marker sits between &quot; entities in the raw template
    t, _, _ = page
    texts = {get_node(t.ast, s.path).text for s in t.slots}
    assert any('"#name#"' in x for x in texts)


@pytest.mark.parametrize(
    "text, segments",
    [
        ("a#b#c", (("text", "a"), ("marker", "b"), ("text", "c"))),
        ("##", (("text", "#"),)),
        ("x##y#z#", (("text", "x#y"), ("marker", "z"))),
        ("#a##b#", (("marker", "a"), ("marker", "b"))),
        ("", ()),
    ],
)
def test_split_markers(text, segments):
    assert split_markers(text) == segments


@pytest.mark.parametrize("text", ["#", "a#b", "##name#", "#1x#", "# #"])
def test_malformed_markers(text):
    with pytest.raises(TemplateError, match="malformed marker"):
        split_markers(text)


def test_malformed_marker_in_template(tag):
    with pytest.raises(TemplateError, match="malformed marker"):
        load_template("<a#b>", tag)


def test_invalid_template_fails_at_load(tag):
    with pytest.raises(ParseError):
        load_template("<#name#", tag)


def test_unbound_marker(tag):
    t = load_template("<#name#>", tag)
    with pytest.raises(TemplateError, match="unbound marker: name"):
        render(t, {}, tag)


def test_values_are_not_rescanned(tag):
    t = load_template("<#a#>,<#b#>", tag)
    out = render(t, {"a": "#b#", "b": "y"}, tag)
    assert out == "<#b#>,<y>"


def test_empty_value_where_token_needs_text(tag):
    t = load_template("<#name#>", tag)
    with pytest.raises(Exception, match="post-encode validation failed"):
        render(t, {"name": ""}, tag)


def test_set_leaf(tag):
    a = RuleNode("Tag", 0, (TokenLeaf("TEXT", "a"),))
    assert set_leaf(a, (0,), "b") == RuleNode("Tag", 0, (TokenLeaf("TEXT", "b"),))
    tags = RuleNode("Tags", 0, (a,))
    assert unparse(set_leaf(tags, (0, 0), "x,y"), tag) == "<x\\,y>"
    with pytest.raises(PathError, match="not a token leaf"):
        set_leaf(tags, (0,), "b")
    with pytest.raises(PathError):
        set_leaf(tags, (4, 0), "b")


def test_reload_of_rendered_page_has_no_markers(page):
    t, html, m = page
    doc = render(t, {"name": "Bob", "actionURL": "/r"}, html, m)
    assert load_template(doc, html, m).slots == ()


def test_benign_identity(page):
    t, html, m = page
    values = {"name": "Bob Smith", "actionURL": "/register"}
    back = parse(render(t, values, html, m), html, m)
    assert back == instantiate(t, values)


@settings(max_examples=60, deadline=None)
@given(st.text(min_size=1, max_size=30))
def test_render_parse_integrity(page, value):
    t, html, m = page
    values = {"name": value, "actionURL": value}
    back = parse(render(t, values, html, m), html, m)
    assert skeleton(back) == skeleton(t.ast)
    assert back == instantiate(t, values)
