"""Load-time checks on grammars and their encode tables."""

from __future__ import annotations

from typing import Optional

from . import codec
from .errors import GrammarError
from .grammar import (
    Alt,
    CharRange,
    Diagnostic,
    Diagnostics,
    EncodeTable,
    Grammar,
    Keyword,
    Not,
    Ref,
    Rep,
    Seq,
    alternatives,
    keyword_token_name,
    walk,
)
from .lexer import TokenMatcher, single_char_set
from .metaparser import parse_grammar

KNOWN_OPTIONS = frozenset({"nostring", "nomlcomments", "noslcomments", "noindent", "lexer", "lookahead"})

WORKING_ALPHABET = "".join(chr(c) for c in range(0x20, 0x7F))


class _Collector:
    def __init__(self):
        self.entries = []

    def error(self, code: str, message: str, line: Optional[int] = None) -> None:
        self.entries.append(Diagnostic("error", code, message, line or None))

    def warning(self, code: str, message: str, line: Optional[int] = None) -> None:
        self.entries.append(Diagnostic("warning", code, message, line or None))


def validate_grammar(g: Grammar) -> Diagnostics:
    """Every invariant violation of ``g`` as diagnostics, in a fixed order."""
    out = _Collector()
    if not g.productions:
        out.error("no-start", "no start symbol: grammar has no productions")

    prod_names, tok_names = set(), set()
    for p in g.productions:
        if p.name in prod_names:
            out.error("duplicate-production", f"production {p.name} defined twice", p.line)
        prod_names.add(p.name)
    for t in g.tokens:
        if t.name in tok_names:
            out.error("duplicate-token", f"token {t.name} defined twice", t.line)
        tok_names.add(t.name)
        if t.name in prod_names:
            out.error("name-clash", f"{t.name} is both a token and a production", t.line)

    for p in g.productions:
        for node in walk(p.body):
            if isinstance(node, Ref) and node.name not in prod_names and node.name not in tok_names:
                out.error("undefined-symbol", f"{p.name} references undefined symbol {node.name}", p.line)
            elif isinstance(node, Keyword) and not node.text:
                out.error("empty-keyword", f"{p.name} contains an empty keyword literal", p.line)

    compiled = {}
    for t in g.all_tokens:
        bad = False
        for node in walk(t.expr):
            if isinstance(node, Not) and single_char_set(node.item) is None:
                out.error("bad-complement", f"token {t.name}: '~' applied to a multi-character expression", t.line)
                bad = True
            elif isinstance(node, CharRange) and node.lo > node.hi:
                out.error("empty-range", f"token {t.name}: empty range {node.lo!r}..{node.hi!r}", t.line)
        if bad:
            continue
        m = TokenMatcher(t)
        compiled[t.name] = m
        if m.nullable():
            out.error("empty-token", f"token {t.name} matches the empty string", t.line)

    seen_tables = set()
    for table in g.tables:
        tok = g.token(table.token)
        if tok is None or tok.keyword:
            out.error("unknown-table-token", f"encodeTable for unknown token {table.token}", table.line)
            continue
        if table.token in seen_tables:
            out.error("duplicate-table", f"second encodeTable for {table.token}", table.line)
            continue
        seen_tables.add(table.token)
        if tok.constant is not None and not tok.subparser:
            out.warning("unused-table", f"encodeTable {table.token} is on a constant token and never applied", table.line)
        _check_table(table, compiled.get(table.token), out)

    for flag, _ in g.options:
        if flag not in KNOWN_OPTIONS:
            out.warning("unknown-option", f"unknown option {flag}")

    if out.entries and any(d.severity == "error" for d in out.entries):
        return Diagnostics(tuple(out.entries))

    _overlap_warnings(g, compiled, out)
    _adjacency_warnings(g, compiled, out)
    _lossy_alternation_warnings(g, out)
    return Diagnostics(tuple(out.entries))


def _check_table(table: EncodeTable, m: Optional[TokenMatcher], out: _Collector) -> None:
    where = f"encodeTable {table.token}"
    line = table.line
    if not table.rules:
        out.error("empty-table", f"{where} has no rules", line)
        return
    for c, e in table.rules:
        if not c or not e:
            out.error("empty-rule", f"{where}: control and escape must be non-empty", line)
            return
    controls, escapes = table.controls, table.escapes
    for i, c in enumerate(controls):
        if c in controls[:i]:
            out.error("injectivity", f"{where}: control {c!r} listed twice", line)
    for i, e in enumerate(escapes):
        if e in escapes[:i]:
            out.error("injectivity", f"{where}: escape {e!r} used for two controls", line)
    control_set = set(controls)
    for c, e in table.rules:
        if e[0] not in control_set:
            out.error(
                "self-protecting-lead",
                f"{where}: escape {e!r} for {c!r} starts with {e[0]!r}, which the table does not encode",
                line,
            )
    for c, e in table.rules:
        if e in control_set:
            out.error(
                "non-reintroduction",
                f"{where}: non-reintroduction violated, escape {e!r} for {c!r} reintroduces a control",
                line,
            )
    for e in escapes:
        for other in escapes:
            if other != e and other.startswith(e):
                out.error("escape-prefix", f"{where}: escape {e!r} is a prefix of escape {other!r}", line)
    if m is not None:
        for c, e in table.rules:
            if not m.accepts(e):
                out.error("closure", f"{where}: escape {e!r} is not accepted by token {table.token}", line)
    if any(d.severity == "error" for d in out.entries):
        return
    for c, e in table.rules:
        try:
            ok = codec.encode(c, table) == e and codec.decode(e, table) == c
        except Exception:
            ok = False
        if not ok:
            out.error("rule-roundtrip", f"{where}: rule {c!r} -> {e!r} does not round-trip", line)


def _overlap_warnings(g: Grammar, compiled: dict, out: _Collector) -> None:
    named = [t for t in g.tokens if t.name in compiled]
    firsts = {t.name: compiled[t.name].first_chars() for t in named}
    for i, a in enumerate(named):
        others = [b.name for b in named[i + 1 :] if firsts[a.name] & firsts[b.name]]
        if others:
            out.warning(
                "first-overlap",
                f"token {a.name} can start with the same character as {', '.join(others)}",
            )


def _first_last(g: Grammar) -> tuple:
    """FIRST/LAST terminal sets and nullability per production, by fixpoint."""
    prods = {p.name: p for p in g.productions}
    first = {name: set() for name in prods}
    last = {name: set() for name in prods}
    nullable = {name: False for name in prods}

    def info(expr):
        if isinstance(expr, Ref):
            if expr.name in prods:
                return first[expr.name], last[expr.name], nullable[expr.name]
            return {expr.name}, {expr.name}, False
        if isinstance(expr, Keyword):
            name = keyword_token_name(expr.text)
            return {name}, {name}, False
        if isinstance(expr, Seq):
            f, l, n = set(), set(), True
            for item in expr.items:
                fi, li, ni = info(item)
                if n:
                    f |= fi
                n = n and ni
            n2 = True
            for item in reversed(expr.items):
                fi, li, ni = info(item)
                if n2:
                    l |= li
                n2 = n2 and ni
            return f, l, n
        if isinstance(expr, Alt):
            f, l, n = set(), set(), False
            for b in expr.branches:
                fi, li, ni = info(b)
                f |= fi
                l |= li
                n = n or ni
            return f, l, n
        if isinstance(expr, Rep):
            fi, li, ni = info(expr.item)
            return fi, li, ni or expr.op in "*?"
        return set(), set(), True

    changed = True
    while changed:
        changed = False
        for name, p in prods.items():
            f, l, n = info(p.body)
            if not f <= first[name] or not l <= last[name] or n != nullable[name]:
                first[name] |= f
                last[name] |= l
                nullable[name] = nullable[name] or n
                changed = True
    return info


def _adjacency_warnings(g: Grammar, compiled: dict, out: _Collector) -> None:
    info = _first_last(g)
    pairs = set()

    def visit(expr):
        if isinstance(expr, Seq):
            items = expr.items
            for i, a in enumerate(items):
                _, la, _ = info(a)
                for b in items[i + 1 :]:
                    fb, _, nb = info(b)
                    pairs.update((x, y) for x in la for y in fb)
                    if not nb:
                        break
        if isinstance(expr, Rep) and expr.op in "*+":
            f, l, _ = info(expr.item)
            pairs.update((x, y) for x in l for y in f)
        for child in _children(expr):
            visit(child)

    for p in g.productions:
        visit(p.body)
    for a, b in sorted(pairs):
        ta, mb, ma = g.token(a), compiled.get(b), compiled.get(a)
        if ta is None or ma is None or mb is None or ta.constant is not None:
            continue
        if ma.follow_chars() & mb.first_chars():
            out.warning("adjacent-merge", f"token {a} may absorb the start of an adjacent {b}")


def _children(expr) -> tuple:
    if isinstance(expr, Seq):
        return expr.items
    if isinstance(expr, Alt):
        return expr.branches
    if isinstance(expr, (Rep, Not)):
        return (expr.item,)
    return ()


def _lossy_alternation_warnings(g: Grammar, out: _Collector) -> None:
    def signature(expr):
        sig = []
        for node in walk(expr):
            if isinstance(node, (Alt, Rep)):
                return None
            if isinstance(node, Ref):
                tok = g.token(node.name)
                if tok is None or tok.subparser or tok.constant is None:
                    sig.append(node.name)
        return tuple(sig)

    for p in g.productions:
        for top in alternatives(p.body):
            for node in walk(top):
                if isinstance(node, Alt):
                    sigs = [signature(b) for b in node.branches]
                    known = [s for s in sigs if s is not None]
                    if len(known) != len(set(known)):
                        out.warning(
                            "lossy-alternation",
                            f"{p.name}: nested alternatives differ only in constants; the AST cannot tell them apart",
                            p.line,
                        )


def check_table_completeness(g: Grammar, token: str, extra: str = "") -> Diagnostics:
    """Warn about characters the token rejects that its table does not encode.

    A character counts as excluded when the token rejects it as a one-character
    string; the check runs over printable ASCII plus ``extra``.
    """
    tok = g.token(token)
    if tok is None:
        raise GrammarError(f"unknown token {token}")
    table = g.table(token)
    if table is None:
        raise GrammarError(f"token has no table: {token}")
    m = TokenMatcher(tok)
    alphabet = dict.fromkeys(WORKING_ALPHABET + extra)
    excluded = [c for c in alphabet if not m.accepts(c)]
    keys = {c for c in table.controls if len(c) == 1}
    uncovered = [c for c in excluded if c not in keys]
    if not uncovered:
        return Diagnostics()
    shown = " ".join(repr(c) for c in uncovered)
    return Diagnostics(
        (Diagnostic("warning", "uncovered-control", f"{token}: uncovered control character(s) {shown}", table.line or None),)
    )


def excluded_characters(g: Grammar, token: str, extra: str = "") -> set:
    m = TokenMatcher(g.token(token))
    return {c for c in WORKING_ALPHABET + extra if not m.accepts(c)}


def ensure_validated(g: Grammar) -> Grammar:
    """Raise :class:`GrammarError` unless ``g`` has no validation errors; cached."""
    if g._cache.get("validated"):
        return g
    diags = validate_grammar(g)
    if not diags.ok:
        lines = "; ".join(str(d) for d in diags.errors)
        raise GrammarError(f"grammar {g.name} is invalid: {lines}", diags)
    g._cache["validated"] = True
    g._cache["diagnostics"] = diags
    return g


def load_grammar(text: str) -> Grammar:
    """Parse and validate grammar text."""
    return ensure_validated(parse_grammar(text))


def mutate(g: Grammar, recipe: str) -> Grammar:
    """Deliberately break one encode table, for mutation testing.

    ``recipe`` is one of ``drop-rule:TOKEN:CONTROL``, ``collide:TOKEN:C1:C2``
    (C2 receives C1's escape) or ``drop-lead:TOKEN``.  The result skips
    validation so the engines run with the broken table.
    """
    kind, _, rest = recipe.partition(":")
    if kind == "drop-rule":
        token, _, control = rest.partition(":")
        table = _table(g, token)
        if control not in table.controls:
            raise GrammarError(f"{token} has no rule for {control!r}")
        new = table.without(control)
    elif kind == "collide":
        token, c1, c2 = rest.split(":", 2)
        table = _table(g, token)
        escapes = dict(table.rules)
        if c1 not in escapes or c2 not in escapes:
            raise GrammarError(f"{token} lacks {c1!r} or {c2!r}")
        new = table.replace(c2, escapes[c1])
    elif kind == "drop-lead":
        token = rest
        table = _table(g, token)
        leads = {e[0] for e in table.escapes}
        new = EncodeTable(token, tuple(r for r in table.rules if r[0] not in leads))
    else:
        raise GrammarError(f"unknown mutation {recipe!r}")
    out = g.with_table(new)
    out._cache["validated"] = True
    out._cache["mutation"] = recipe
    # the fuzzer keeps generating the controls the broken table lost
    out._cache["original_controls"] = table.controls
    return out


def _table(g: Grammar, token: str) -> EncodeTable:
    table = g.table(token)
    if table is None:
        raise GrammarError(f"token has no table: {token}")
    return table
