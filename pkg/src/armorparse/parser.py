"""Earley parsing of documents into ASTs.

Production bodies are regular expressions over symbols; they are expanded
into plain BNF with auxiliary nonterminals for nested groups and
repetitions.  Auxiliary nonterminals are spliced into their parent's child
list, so only named productions become :class:`RuleNode` values.

Lexing happens inside the parser: at each position only the terminals the
chart expects are tried, longest match first, keyword literals before named
tokens, then declaration order.  This lets one grammar reuse characters
that mean different things in different places (HTML text vs. tag names).
"""

from __future__ import annotations

import os
import sys
from typing import Mapping, Optional, Union

from .codec import codec_for
from .errors import AmbiguityError, DecodeError, DepthError, ParseError
from .grammar import Alt, Grammar, Keyword, Ref, Rep, Seq, alternatives, keyword_token_name
from .lexer import as_text, matchers, position
from .metaparser import EMPTY_MANIFEST, CompositionManifest
from .nodes import Node, RuleNode, SubLangNode, TokenLeaf
from .validation import ensure_validated

DEFAULT_MAX_DEPTH = 32
_RECURSION_LIMIT = 20000

CONST, DATA, SUB = 0, 1, 2


def default_max_depth() -> int:
    raw = os.environ.get("ARMORPARSE_MAX_DEPTH")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            return DEFAULT_MAX_DEPTH
        if value > 0:
            return value
    return DEFAULT_MAX_DEPTH


class CompiledGrammar:
    """BNF expansion of a grammar plus per-terminal lexing data.

    Nonterminals are ints >= 0; terminal t is encoded as ``-1 - t``.
    """

    def __init__(self, g: Grammar):
        self.g = g
        ms = matchers(g)
        order = list(g.keyword_tokens) + list(g.tokens)
        self.term_names = [t.name for t in order]
        self.term_index = {name: i for i, name in enumerate(self.term_names)}
        self.term_matchers = [ms[name] for name in self.term_names]
        self.term_kind = []
        self.term_const = []
        for t in order:
            const = t.constant
            if t.subparser:
                self.term_kind.append(SUB)
            elif const is not None:
                self.term_kind.append(CONST)
            else:
                self.term_kind.append(DATA)
            self.term_const.append(const)
        # index in ``order`` doubles as priority: keywords first, then declaration order

        self.nt_names = []
        self.nt_index = {}
        self.lhs = []
        self.rhs = []
        self.meta = []  # (rule name, alt index) for named productions, None for auxiliaries
        self._counter = 0
        for p in g.productions:
            self._nt(p.name)
        for p in g.productions:
            lhs = self.nt_index[p.name]
            for i, branch in enumerate(alternatives(p.body)):
                self._rule(lhs, self._flatten(branch, p.name), (p.name, i))
        self.by_lhs = [[] for _ in self.nt_names]
        for r, lhs in enumerate(self.lhs):
            self.by_lhs[lhs].append(r)
        self.rhs_len = [len(r) for r in self.rhs]
        self.nullable = self._nullable()
        self.start = self.nt_index[g.start]

    def _nt(self, name: str) -> int:
        idx = self.nt_index.get(name)
        if idx is None:
            idx = len(self.nt_names)
            self.nt_index[name] = idx
            self.nt_names.append(name)
        return idx

    def _aux(self, owner: str, kind: str) -> int:
        self._counter += 1
        return self._nt(f"{owner}#{kind}{self._counter}")

    def _rule(self, lhs: int, rhs: list, meta) -> None:
        self.lhs.append(lhs)
        self.rhs.append(tuple(rhs))
        self.meta.append(meta)

    def _flatten(self, expr, owner: str) -> list:
        if isinstance(expr, Ref):
            if expr.name in self.nt_index:
                return [self.nt_index[expr.name]]
            return [-1 - self.term_index[expr.name]]
        if isinstance(expr, Keyword):
            return [-1 - self.term_index[keyword_token_name(expr.text)]]
        if isinstance(expr, Seq):
            out = []
            for item in expr.items:
                out.extend(self._flatten(item, owner))
            return out
        if isinstance(expr, Alt):
            aux = self._aux(owner, "alt")
            for branch in expr.branches:
                self._rule(aux, self._flatten(branch, owner), None)
            return [aux]
        if isinstance(expr, Rep):
            aux = self._aux(owner, "rep")
            item = self._flatten(expr.item, owner)
            if expr.op == "?":
                self._rule(aux, [], None)
                self._rule(aux, item, None)
            else:
                self._rule(aux, [] if expr.op == "*" else item, None)
                self._rule(aux, [aux] + item, None)
            return [aux]
        raise TypeError(f"unexpected production element {expr!r}")

    def _nullable(self) -> list:
        nullable = [False] * len(self.nt_names)
        changed = True
        while changed:
            changed = False
            for r, lhs in enumerate(self.lhs):
                if not nullable[lhs] and all(s >= 0 and nullable[s] for s in self.rhs[r]):
                    nullable[lhs] = changed = True
        return nullable

    def describe_terminal(self, sym: int) -> str:
        return self.term_names[-1 - sym]


def compiled(g: Grammar) -> CompiledGrammar:
    ensure_validated(g)
    c = g._cache.get("compiled")
    if c is None:
        c = g._cache["compiled"] = CompiledGrammar(g)
    return c


class _Run:
    """One parse of one document at one nesting level."""

    def __init__(self, text, g, m, hooks, depth, max_depth):
        self.text = text
        self.g = g
        self.m = m
        self.hooks = hooks
        self.depth = depth
        self.max_depth = max_depth
        self.c = compiled(g)

    # -- recognition -------------------------------------------------------

    def recognize(self) -> None:
        c = self.c
        n = len(self.text)
        rhs, lhs_of, by_lhs, nullable = c.rhs, c.lhs, c.by_lhs, c.nullable
        sets = []  # per position: set of (rule, dot, origin)
        waiting = []  # per position: nonterminal -> items waiting on it
        completed = []  # per position: nonterminal -> origins
        self.tokens = []  # per scan: (terminal symbol, start offset, end offset)
        offsets = [0]

        first = [(r, 0, 0) for r in by_lhs[c.start]]
        pending = first
        k = 0
        while True:
            items = list(dict.fromkeys(pending))
            seen = set(items)
            wait_k, comp_k, scans = {}, {}, {}
            sets.append(seen)
            waiting.append(wait_k)
            completed.append(comp_k)
            i = 0
            while i < len(items):
                item = items[i]
                i += 1
                r, d, o = item
                body = rhs[r]
                if d == len(body):
                    lhs = lhs_of[r]
                    origins = comp_k.get(lhs)
                    if origins is None:
                        comp_k[lhs] = {o}
                    elif o in origins:
                        continue
                    else:
                        origins.add(o)
                    if o != k:
                        for r2, d2, o2 in waiting[o].get(lhs, ()):
                            new = (r2, d2 + 1, o2)
                            if new not in seen:
                                seen.add(new)
                                items.append(new)
                    continue
                sym = body[d]
                if sym >= 0:
                    lst = wait_k.get(sym)
                    if lst is None:
                        wait_k[sym] = [item]
                        for r2 in by_lhs[sym]:
                            new = (r2, 0, k)
                            if new not in seen:
                                seen.add(new)
                                items.append(new)
                    else:
                        lst.append(item)
                    if nullable[sym]:
                        new = (r, d + 1, o)
                        if new not in seen:
                            seen.add(new)
                            items.append(new)
                else:
                    lst = scans.get(sym)
                    if lst is None:
                        scans[sym] = [item]
                    else:
                        lst.append(item)
            pos = offsets[k]
            if pos == n:
                break
            if not scans:
                self._fail(pos, "unexpected input, expected end of document", k)
            sym, length = self._lex(pos, scans)
            if sym is None:
                self._fail(pos, "no expected token matches", k, scans)
            self.tokens.append((sym, pos, pos + length))
            offsets.append(pos + length)
            pending = [(r, d + 1, o) for r, d, o in scans[sym]]
            k += 1
        self.sets, self.completed, self.offsets = sets, completed, offsets
        self.k = k
        if c.start not in completed[k] or 0 not in completed[k][c.start]:
            expected = self._expected(sets[k])
            self._fail(n, "unexpected end of document" + (f", expected {expected}" if expected else ""), k)

    def _lex(self, pos: int, scans: dict) -> tuple:
        c = self.c
        best, best_len, best_prio = None, 0, None
        for sym in scans:
            t = -1 - sym
            length = c.term_matchers[t].match(self.text, pos)
            if length > best_len or (length == best_len and length > 0 and t < best_prio):
                best, best_len, best_prio = sym, length, t
        return best, best_len

    def _expected(self, items) -> str:
        rhs = self.c.rhs
        names = sorted(
            {self.c.describe_terminal(rhs[r][d]) for r, d, _ in items if d < len(rhs[r]) and rhs[r][d] < 0}
        )
        return ", ".join(names)

    def _fail(self, pos: int, message: str, k: int, scans=None):
        line, col = position(self.text, pos)
        if scans is not None:
            expected = ", ".join(sorted(self.c.describe_terminal(s) for s in scans))
        else:
            expected = None
        msg = f"parse error at token {k} (offset {pos}, {line}:{col}): {message}"
        if expected:
            msg += f", expected {expected}"
        if pos < len(self.text):
            msg += f"; found {self.text[pos:pos + 12]!r}"
        raise ParseError(msg, pos)

    # -- derivation --------------------------------------------------------

    def derive(self) -> Node:
        self.memo_nt = {}
        self.memo_walk = {}
        self.active = set()
        self.leaves = {}
        roots = self._derive(self.c.start, 0, self.k)
        (root,) = roots[0]
        return root

    def _ambiguous(self, nt: int, i: int, j: int):
        name = self.c.nt_names[nt].split("#")[0]
        a, b = self.offsets[i], self.offsets[j]
        raise AmbiguityError(
            f"ambiguous derivation: {name} has more than one parse of {self.text[a:b]!r} (offsets {a}..{b})", a
        )

    def _derive(self, nt: int, i: int, j: int) -> list:
        key = (nt, i, j)
        got = self.memo_nt.get(key)
        if got is not None:
            return got
        if key in self.active:
            self._ambiguous(nt, i, j)
        self.active.add(key)
        c = self.c
        results = []
        chart = self.sets[j]
        for r in c.by_lhs[nt]:
            full = (r, c.rhs_len[r], i)
            if full not in chart:
                continue
            meta = c.meta[r]
            for kids in self._walk(r, c.rhs_len[r], i, j):
                results.append((RuleNode(meta[0], meta[1], kids),) if meta else kids)
                if len(results) > 1:
                    self._ambiguous(nt, i, j)
        self.active.discard(key)
        self.memo_nt[key] = results
        return results

    def _walk(self, r: int, d: int, o: int, end: int) -> list:
        """Child tuples for the first ``d`` symbols of rule ``r`` spanning o..end."""
        if d == 0:
            return [()] if o == end else []
        key = (r, d, o, end)
        got = self.memo_walk.get(key)
        if got is not None:
            return got
        sym = self.c.rhs[r][d - 1]
        out = []
        if sym < 0:
            if end > o and self.tokens[end - 1][0] == sym and (r, d - 1, o) in self.sets[end - 1]:
                leaf = self._leaf(end - 1)
                for prefix in self._walk(r, d - 1, o, end - 1):
                    out.append(prefix + leaf)
        else:
            origins = self.completed[end].get(sym, ())
            for mid in sorted(origins):
                if mid < o or (r, d - 1, o) not in self.sets[mid]:
                    continue
                prefixes = self._walk(r, d - 1, o, mid)
                if not prefixes:
                    continue
                for tail in self._derive(sym, mid, end):
                    for prefix in prefixes:
                        out.append(prefix + tail)
                if len(out) > 2:
                    break
        out = out[:2]
        self.memo_walk[key] = out
        return out

    def _leaf(self, k: int) -> tuple:
        got = self.leaves.get(k)
        if got is not None:
            return got
        sym, start, end = self.tokens[k]
        t = -1 - sym
        c = self.c
        kind = c.term_kind[t]
        if kind == CONST:
            leaf = ()
        else:
            name = c.term_names[t]
            raw = self.text[start:end]
            text = self._decode(name, raw, start)
            if kind == DATA:
                leaf = (TokenLeaf(name, text),)
            else:
                leaf = (self._subparse(name, text, start),)
        self.leaves[k] = leaf
        return leaf

    def _decode(self, name: str, raw: str, start: int) -> str:
        codec = codec_for(self.g, name, self.hooks)
        if codec is None:
            return raw
        try:
            return codec.decode(raw)
        except DecodeError as exc:
            line, col = position(self.text, start)
            raise ParseError(
                f"decode error in {name} at offset {start + exc.offset} ({line}:{col}): {exc}", start
            ) from exc
        except ParseError:
            raise
        except Exception as exc:  # custom decoder hooks may raise anything
            raise ParseError(f"decode error in {name} at offset {start}: {exc}", start) from exc

    def _subparse(self, name: str, text: str, start: int) -> SubLangNode:
        sub = self.m.sub_grammar(self.g.name, name)
        if sub is None:
            raise ParseError(f"sub-grammar unbound for {self.g.name}.{name}", start)
        frame = f"{self.g.name}.{name}@{start}"
        try:
            inner = _parse_text(text, sub, self.m, self.hooks, self.depth + 1, self.max_depth)
        except ParseError as exc:
            raise exc.within(frame) from None
        return SubLangNode(name, sub.name, inner)


def _parse_text(text, g, m, hooks, depth, max_depth) -> Node:
    if depth > max_depth:
        raise DepthError(f"recursion depth exceeded (limit {max_depth})")
    run = _Run(text, g, m, hooks, depth, max_depth)
    run.recognize()
    return run.derive()


def parse(
    doc: Union[str, bytes],
    g: Grammar,
    m: Optional[CompositionManifest] = None,
    *,
    hooks: Optional[Mapping] = None,
    max_depth: Optional[int] = None,
) -> Node:
    """Parse ``doc`` with ``g``, decoding data tokens and parsing sub-languages.

    Raises :class:`ParseError` (or a subclass) when the document is not in
    the language, is ambiguous, contains a malformed escape, or nests
    sub-languages deeper than ``max_depth``.
    """
    text = as_text(doc)
    ensure_validated(g)
    if m is None:
        m = EMPTY_MANIFEST
    if max_depth is None:
        max_depth = default_max_depth()
    old = sys.getrecursionlimit()
    if old < _RECURSION_LIMIT:
        sys.setrecursionlimit(_RECURSION_LIMIT)
    try:
        return _parse_text(text, g, m, hooks, 1, max_depth)
    except RecursionError:
        raise ParseError("document nests too deeply to derive") from None
    finally:
        if old < _RECURSION_LIMIT:
            sys.setrecursionlimit(old)
