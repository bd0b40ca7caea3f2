import pytest

from armorparse import corpus
from armorparse.codec import encode
from armorparse.nodes import iter_leaves
from armorparse.parser import parse
from armorparse.template import render
from armorparse.unparser import unparse
from armorparse.validation import check_table_completeness, validate_grammar


@pytest.mark.parametrize("stem", corpus.GRAMMARS)
def test_grammar_validates_cleanly(stem):
    g = corpus.load(stem)
    d = validate_grammar(g)
    assert d.errors == ()
    for table in g.tables:
        assert check_table_completeness(g, table.token).ok


def test_grammar_names(grammars):
    assert set(grammars) == {"Tag", "Container", "ReducedTag", "HtmlMini", "JsMini"}


def test_html_contexts(html):
    assert dict(html.table("TEXT").rules) == {"<": "&lt;", ">": "&gt;", "&": "&amp;"}
    attr = dict(html.table("ATTRVAL").rules)
    assert attr['"'] == "&quot;" and attr["'"] == "&apos;" and attr["<"] == "&lt;"
    assert html.table("SCRIPT") is None and html.token("SCRIPT").subparser
    assert html.token("ONCLICK").subparser and html.table("ONCLICK").rules


def test_js_string_tables(js):
    for tok, quote in (("DQCHARS", '"'), ("SQCHARS", "'")):
        rules = dict(js.table(tok).rules)
        assert rules["\\"] == "\\\\" and rules[quote] == "\\" + quote and rules["<"] == "\\u003C"


def test_script_body_cannot_close_early(page):
    t, html, m = page
    doc = render(t, {"name": "</script><script>alert(1)</script>", "actionURL": "/r"}, html, m)
    start = doc.index("<script>")
    assert doc.count("</script>") == 1
    assert "\\u003C/script>" in doc[start:]


def test_page_round_trips_byte_exact(page):
    t, html, m = page
    assert unparse(t.ast, html, m) == corpus.template_text("page")


def test_attack_corpus():
    xss = corpus.attacks("xss")
    assert 95 <= len(xss) <= 110 and len(set(xss)) == len(xss)
    assert ";alert(1)" in xss
    assert any("\u2028" in p for p in xss)
    assert len(corpus.attacks("curated_subset")) == 11


def test_read_payloads():
    assert corpus.read_payloads("a\n\n\\u0000b\r\nc\\n") == ["a", "\x00b", "c\\n"]


def test_onclick_entities_follow_js_unparse(page):
    t, html, m = page
    doc = render(t, {"name": 'a"b', "actionURL": "/r"}, html, m)
    raw = corpus.onclick_before(doc, "Test2")
    # '"' is plain inside a single-quoted JS string; only the attribute table touches it
    assert raw == "alert('a&quot;b');"
    js_text = "alert('a\"b');"
    assert encode(js_text, html.table("ONCLICK")) == raw


def test_every_leaf_of_rendered_page_parses_back(page):
    t, html, m = page
    doc = render(t, {"name": "x'y\"z<&>", "actionURL": "/r?a=1&b=2"}, html, m)
    back = parse(doc, html, m)
    texts = [leaf.text for _, leaf in iter_leaves(back)]
    assert "/r?a=1&b=2" in texts


def test_selftest_pristine():
    d = corpus.corpus_selftest(fuzz_cases=50)
    assert list(d) == []


def test_selftest_detects_dropped_attribute_rule():
    d = corpus.corpus_selftest(mutation="drop-rule:HtmlMini.ATTRVAL:<", fuzz_cases=50)
    assert not d.ok
    assert any(e.code in ("attack", "fuzz") for e in d.errors)


def test_selftest_empty_attack_list():
    d = corpus.corpus_selftest(payloads=[], fuzz_cases=10)
    assert d.errors == ()
    assert [w.code for w in d.warnings] == ["empty-corpus"]
