"""Reader for grammar files and composition manifests, plus a canonical writer.

Grammar file syntax::

    [package a.b.c;]
    grammar Name {
      options { nostring lookahead = 4 }
      Prod = A ("x" B)* | C? ;
      [subparser] token T = ~('<' | '>') + | 'a'..'z' ;
      encodeTable T = { "<" -> "\\<", ">" -> "\\>" };
    }

Manifest syntax::

    compose { Outer.TOKEN -> Inner; }
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import GrammarSyntaxError, ManifestError
from .grammar import (
    Alt,
    Char,
    CharRange,
    EncodeTable,
    Expr,
    Grammar,
    Keyword,
    Not,
    Production,
    Ref,
    Rep,
    Seq,
    String,
    TokenDef,
)

_PUNCT = ("->", "..", "{", "}", "(", ")", ";", ",", "=", "|", "*", "+", "?", "~", ".")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")
_ESCAPES = {"\\": "\\", "'": "'", '"': '"', "n": "\n", "t": "\t", "r": "\r"}


@dataclass
class _Tok:
    kind: str  # ident, int, string, char, punct, eof
    value: str
    line: int
    col: int


def _lex(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in text[i : i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            advance((end if end >= 0 else n) - i)
            continue
        if ch == '"' or ch == "'":
            start_line, start_col = line, col
            value, length = _read_literal(text, i, line, col)
            toks.append(_Tok("string" if ch == '"' else "char", value, start_line, start_col))
            advance(length)
            continue
        m = _IDENT.match(text, i)
        if m:
            toks.append(_Tok("ident", m.group(), line, col))
            advance(m.end() - i)
            continue
        m = _INT.match(text, i)
        if m:
            toks.append(_Tok("int", m.group(), line, col))
            advance(m.end() - i)
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(_Tok("punct", p, line, col))
                advance(len(p))
                break
        else:
            raise GrammarSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


def _read_literal(text: str, start: int, line: int, col: int) -> tuple:
    quote = text[start]
    out = []
    i = start + 1
    while True:
        if i >= len(text) or text[i] == "\n":
            kind = "string" if quote == '"' else "char"
            raise GrammarSyntaxError(f"unterminated {kind} literal", line, col)
        ch = text[i]
        if ch == quote:
            return "".join(out), i + 1 - start
        if ch == "\\":
            nxt = text[i + 1 : i + 2]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            if nxt == "u":
                m = re.compile(r"\{([0-9A-Fa-f]{1,6})\}").match(text, i + 2)
                if m and int(m.group(1), 16) <= 0x10FFFF:
                    out.append(chr(int(m.group(1), 16)))
                    i = m.end()
                    continue
            raise GrammarSyntaxError(f"bad escape \\{nxt} in literal", line, col + (i - start))
        out.append(ch)
        i += 1


class _Reader:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str, tok: Optional[_Tok] = None):
        tok = tok or self.cur
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        raise GrammarSyntaxError(f"{message}, found {found}", tok.line, tok.col)

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.cur
        return tok.kind == kind and (value is None or tok.value == value)

    def at_punct(self, *values: str) -> bool:
        return self.cur.kind == "punct" and self.cur.value in values

    def take(self) -> _Tok:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str, value: Optional[str] = None) -> _Tok:
        if not self.at(kind, value):
            self.error(f"expected {value or kind}")
        return self.take()

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]


def parse_grammar(text: str) -> Grammar:
    """Read grammar DSL text into an unvalidated :class:`Grammar`."""
    r = _Reader(text)
    package = None
    if r.at("ident", "package"):
        r.take()
        package = _qualified_name(r)
        r.expect("punct", ";")
    r.expect("ident", "grammar")
    name = r.expect("ident").value
    r.expect("punct", "{")
    options = []
    if r.at("ident", "options") and r.peek().kind == "punct" and r.peek().value == "{":
        r.take()
        r.take()
        while not r.at_punct("}"):
            flag = r.expect("ident").value
            value = None
            if r.at_punct("="):
                r.take()
                value = int(r.expect("int").value)
            options.append((flag, value))
            if r.at_punct(";", ","):
                r.take()
        r.take()
    productions, tokens, tables = [], [], []
    while not r.at_punct("}"):
        tok = r.cur
        if tok.kind != "ident":
            r.error("expected production, token or encodeTable")
        if tok.value == "encodeTable" and r.peek().kind == "ident":
            tables.append(_table(r))
        elif tok.value in ("token", "subparser") and r.peek().kind == "ident":
            subparser = False
            if tok.value == "subparser":
                r.take()
                subparser = True
                r.expect("ident", "token")
            else:
                r.take()
            tname = r.expect("ident")
            r.expect("punct", "=")
            expr = _t_alt(r)
            r.expect("punct", ";")
            tokens.append(TokenDef(tname.value, expr, subparser=subparser, line=tname.line))
        else:
            r.take()
            r.expect("punct", "=")
            body = _p_alt(r)
            r.expect("punct", ";")
            productions.append(Production(tok.value, body, line=tok.line))
    r.take()
    r.expect("eof")
    return Grammar(name, package, tuple(options), tuple(productions), tuple(tokens), tuple(tables))


def _qualified_name(r: _Reader) -> str:
    parts = [r.expect("ident").value]
    while r.at_punct("."):
        r.take()
        parts.append(r.expect("ident").value)
    return ".".join(parts)


def _table(r: _Reader) -> EncodeTable:
    head = r.take()
    token = r.expect("ident").value
    r.expect("punct", "=")
    r.expect("punct", "{")
    rules = []
    while True:
        control = r.expect("string").value
        r.expect("punct", "->")
        escape = r.expect("string").value
        rules.append((control, escape))
        if r.at_punct(";", ","):
            r.take()
            if r.at_punct("}"):
                break
            continue
        if r.at_punct("}"):
            break
        r.error("expected ';', ',' or '}' in encodeTable")
    r.take()
    if r.at_punct(";"):
        r.take()
    return EncodeTable(token, tuple(rules), line=head.line)


def _wrap(cls, items: list):
    return items[0] if len(items) == 1 else cls(tuple(items))


def _p_alt(r: _Reader) -> Expr:
    branches = [_p_seq(r)]
    while r.at_punct("|"):
        r.take()
        branches.append(_p_seq(r))
    return _wrap(Alt, branches)


def _p_seq(r: _Reader) -> Expr:
    items = []
    while r.at("ident") or r.at("string") or r.at_punct("("):
        items.append(_postfix(r, _p_factor(r)))
    return Seq(()) if not items else _wrap(Seq, items)


def _p_factor(r: _Reader) -> Expr:
    tok = r.take()
    if tok.kind == "ident":
        return Ref(tok.value)
    if tok.kind == "string":
        return Keyword(tok.value)
    inner = _p_alt(r)
    r.expect("punct", ")")
    return inner


def _postfix(r: _Reader, expr: Expr) -> Expr:
    if r.at_punct("*", "+", "?"):
        return Rep(expr, r.take().value)
    return expr


def _t_alt(r: _Reader) -> Expr:
    branches = [_t_seq(r)]
    while r.at_punct("|"):
        r.take()
        branches.append(_t_seq(r))
    return _wrap(Alt, branches)


def _t_seq(r: _Reader) -> Expr:
    items = []
    while r.at("char") or r.at("string") or r.at_punct("(", "~"):
        items.append(_postfix(r, _t_factor(r)))
    return Seq(()) if not items else _wrap(Seq, items)


def _t_factor(r: _Reader) -> Expr:
    tok = r.take()
    if tok.kind == "char":
        if len(tok.value) != 1:
            r.error("character literal must hold exactly one character", tok)
        if r.at_punct(".."):
            r.take()
            hi = r.expect("char")
            if len(hi.value) != 1:
                r.error("character literal must hold exactly one character", hi)
            return CharRange(tok.value, hi.value)
        return Char(tok.value)
    if tok.kind == "string":
        return String(tok.value)
    if tok.value == "~":
        return Not(_t_factor(r))
    inner = _t_alt(r)
    r.expect("punct", ")")
    return inner


# -- canonical writer --------------------------------------------------------


def _quote(text: str, quote: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == quote:
            out.append("\\" + quote)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif not ch.isprintable():
            out.append("\\u{%X}" % ord(ch))
        else:
            out.append(ch)
    return quote + "".join(out) + quote


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, Keyword):
        return _quote(expr.text, '"')
    if isinstance(expr, String):
        return _quote(expr.text, '"')
    if isinstance(expr, Char):
        return _quote(expr.char, "'")
    if isinstance(expr, CharRange):
        return _quote(expr.lo, "'") + ".." + _quote(expr.hi, "'")
    if isinstance(expr, Not):
        return "~" + _group(expr.item, "atom")
    if isinstance(expr, Rep):
        return _group(expr.item, "atom") + expr.op
    if isinstance(expr, Seq):
        if not expr.items:
            return ""
        return " ".join(_group(item, "seq") for item in expr.items)
    if isinstance(expr, Alt):
        return " | ".join(_group(b, "alt") for b in expr.branches)
    raise TypeError(f"not an expression: {expr!r}")


def _group(expr: Expr, ctx: str) -> str:
    if ctx == "atom":
        needs = isinstance(expr, (Seq, Alt, Rep, Not))
    elif ctx == "seq":
        needs = isinstance(expr, (Seq, Alt))
    else:
        needs = isinstance(expr, Alt)
    text = format_expr(expr)
    return f"({text})" if needs else text


def format_grammar(g: Grammar) -> str:
    """Canonical DSL text; ``parse_grammar(format_grammar(g)) == g``."""
    lines = []
    if g.package:
        lines.append(f"package {g.package};")
        lines.append("")
    lines.append(f"grammar {g.name} {{")
    if g.options:
        opts = " ".join(f if v is None else f"{f} = {v}" for f, v in g.options)
        lines.append(f"  options {{ {opts} }}")
    for p in g.productions:
        lines.append(f"  {p.name} = {format_expr(p.body)} ;")
    for t in g.tokens:
        prefix = "subparser token" if t.subparser else "token"
        lines.append(f"  {prefix} {t.name} = {format_expr(t.expr)} ;")
    for table in g.tables:
        rules = ", ".join(_quote(c, '"') + " -> " + _quote(e, '"') for c, e in table.rules)
        lines.append(f"  encodeTable {table.token} = {{ {rules} }};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- composition manifests ---------------------------------------------------


@dataclass(frozen=True)
class CompositionManifest:
    """Binding of subparser tokens to the grammars of their sub-languages."""

    bindings: Mapping = field(default_factory=dict)  # (grammar, token) -> grammar name
    grammars: Mapping = field(default_factory=dict)  # grammar name -> Grammar

    def sub_grammar(self, grammar: str, token: str) -> Optional[Grammar]:
        name = self.bindings.get((grammar, token))
        return None if name is None else self.grammars.get(name)

    def grammar(self, name: str) -> Optional[Grammar]:
        return self.grammars.get(name)

    def __hash__(self) -> int:
        return id(self)


EMPTY_MANIFEST = CompositionManifest()


def read_bindings(text: str) -> list:
    """Syntax-only read of a manifest: ``[(grammar, token, sub_grammar, line)]``."""
    r = _Reader(text)
    r.expect("ident", "compose")
    r.expect("punct", "{")
    out = []
    while not r.at_punct("}"):
        g = r.expect("ident")
        r.expect("punct", ".")
        tok = r.expect("ident").value
        r.expect("punct", "->")
        sub = r.expect("ident").value
        r.expect("punct", ";")
        out.append((g.value, tok, sub, g.line))
    r.take()
    r.expect("eof")
    return out


def parse_manifest(text: str, grammars: Iterable[Grammar] | Mapping) -> CompositionManifest:
    """Resolve a manifest against loaded grammars.

    Every subparser token of every grammar in ``grammars`` must end up bound.
    """
    try:
        entries = read_bindings(text)
    except GrammarSyntaxError as exc:
        raise ManifestError(f"manifest syntax error at {exc.line}:{exc.column}: {exc.message}") from exc
    return build_manifest([(g, t, s) for g, t, s, _ in entries], grammars)


def build_manifest(entries, grammars: Iterable[Grammar] | Mapping) -> CompositionManifest:
    if isinstance(grammars, Mapping):
        by_name = dict(grammars)
    else:
        by_name = {g.name: g for g in grammars}
    bindings = {}
    for gname, tname, sub in entries:
        g = by_name.get(gname)
        if g is None:
            raise ManifestError(f"unknown grammar {gname}")
        tok = g.token(tname)
        if tok is None:
            raise ManifestError(f"{gname} has no token {tname}")
        if not tok.subparser:
            raise ManifestError(f"{tname} is not a subparser token")
        if sub not in by_name:
            raise ManifestError(f"unknown grammar {sub}")
        if (gname, tname) in bindings and bindings[(gname, tname)] != sub:
            raise ManifestError(f"{gname}.{tname} bound twice")
        bindings[(gname, tname)] = sub
    for g in by_name.values():
        for tok in g.tokens:
            if tok.subparser and (g.name, tok.name) not in bindings:
                raise ManifestError(f"unbound subparser token {tok.name}")
    return CompositionManifest(bindings, by_name)


def single(g: Grammar) -> CompositionManifest:
    """Manifest holding only ``g``; valid when ``g`` has no subparser tokens."""
    return build_manifest([], [g])


def format_manifest(m: CompositionManifest) -> str:
    lines = ["compose {"]
    for (g, t), sub in sorted(m.bindings.items()):
        lines.append(f"  {g}.{t} -> {sub};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def describe_literal(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


def resolve_manifest(text: str, available: Mapping, extra: Iterable[str] = ()) -> CompositionManifest:
    """Build a manifest over just the grammars it names (plus ``extra``).

    ``available`` maps grammar names to grammars; names the manifest
    mentions but ``available`` lacks are reported as unknown.
    """
    try:
        entries = read_bindings(text)
    except GrammarSyntaxError as exc:
        raise ManifestError(f"manifest syntax error at {exc.line}:{exc.column}: {exc.message}") from exc
    chosen = {}
    for name in list(extra) + [n for g, _, s, _ in entries for n in (g, s)]:
        if name not in available:
            raise ManifestError(f"unknown grammar {name}")
        chosen[name] = available[name]
    return build_manifest([(g, t, s) for g, t, s, _ in entries], chosen)
