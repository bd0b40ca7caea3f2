import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armorparse.errors import TokenizeError
from armorparse.lexer import CharSet, matcher, token_accepts, tokenize
from armorparse.metaparser import parse_grammar


@pytest.mark.parametrize(
    "s, ok",
    [("ab", True), ("", False), ("a,b", False), ("a\\,b", True), ("\\<\\>\\\\", True), ("a\\", False), ("\\x", False)],
)
def test_text_language(tag, s, ok):
    assert token_accepts(matcher(tag, "TEXT"), s) is ok


def test_longest_match_from_offset(tag):
    m = matcher(tag, "TEXT")
    assert m.match("<ab\\,c>", 1) == 5
    assert m.match("<ab", 0) == -1


def test_complement_covers_non_ascii(tag):
    assert token_accepts(matcher(tag, "TEXT"), "é\U0001F600 ")


def test_tokenize_tag(tag):
    toks = tokenize("<a>", tag)
    assert [(t.name, t.text, t.offset) for t in toks] == [("LT", "<", 0), ("TEXT", "a", 1), ("GT", ">", 2)]


def test_tokenize_empty(tag):
    assert tokenize("", tag) == []


def test_tokenize_error_offset(reduced):
    with pytest.raises(TokenizeError) as info:
        tokenize("<a>?", reduced)
    assert info.value.offset == 3
    assert "no token matches at offset 3" in str(info.value)


def test_question_mark_is_tag_text(tag):
    # the complement class of the full tag grammar admits '?'
    assert [t.name for t in tokenize("<a>?", tag)] == ["LT", "TEXT", "GT", "TEXT"]


def test_tokenize_error_reports_line_and_column():
    g = parse_grammar("grammar X { S = A; token A = ('a' | '\\n')+; }")
    with pytest.raises(TokenizeError) as info:
        tokenize("aa\naxa", g)
    assert (info.value.offset, info.value.line, info.value.column) == (4, 2, 2)


def test_keyword_outranks_named_token():
    g = parse_grammar("grammar X { S = \"if\" W; token W = 'a'..'z'+; }")
    assert [t.name for t in tokenize("if", g)] != ["W"]
    assert [t.name for t in tokenize("iff", g)] == ["W"]


def test_declaration_order_breaks_ties():
    g = parse_grammar("grammar X { S = A | B; token A = 'x'; token B = 'x' | 'y'; }")
    assert [t.name for t in tokenize("xy", g)] == ["A", "B"]


def test_invalid_utf8_is_a_tokenize_error(tag):
    with pytest.raises(TokenizeError, match="invalid UTF-8"):
        tokenize(b"<a\xff>", tag)


def test_table_escapes_are_accepted(grammars):
    # closure at the matcher level: every escape is itself valid token text
    for g in grammars.values():
        for table in g.tables:
            m = matcher(g, table.token)
            for _, e in table.rules:
                assert token_accepts(m, e), (g.name, table.token, e)


def test_charset_operations():
    a = CharSet.of("abc")
    assert "b" in a and "d" not in a
    assert "d" in CharSet.span("a", "z")


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="<>,\\ab", max_size=20))
def test_tokens_concatenate_to_input(tag, text):
    try:
        toks = tokenize(text, tag)
    except TokenizeError:
        return
    assert "".join(t.text for t in toks) == text
    offsets = [t.offset for t in toks]
    assert offsets == sorted(set(offsets))
    assert tokenize(text, tag) == toks
