"""Token matchers and the longest-match tokenizer."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Union

from .errors import TokenizeError
from .grammar import Alt, Char, CharRange, Expr, Grammar, Not, Rep, Seq, String, TokenDef

MAX_CODEPOINT = 0x10FFFF
DEAD = -1


class CharSet:
    """Set of Unicode scalar values stored as sorted, disjoint, inclusive ranges."""

    __slots__ = ("ranges", "_los")

    def __init__(self, ranges=()):
        merged = []
        for lo, hi in sorted(ranges):
            if merged and lo <= merged[-1][1] + 1:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        self.ranges = tuple(merged)
        self._los = [lo for lo, _ in merged]

    @classmethod
    def of(cls, chars: str) -> "CharSet":
        return cls((ord(c), ord(c)) for c in chars)

    @classmethod
    def span(cls, lo: str, hi: str) -> "CharSet":
        return cls([(ord(lo), ord(hi))]) if lo <= hi else cls()

    def __contains__(self, ch: str) -> bool:
        cp = ord(ch)
        i = bisect.bisect_right(self._los, cp) - 1
        return i >= 0 and cp <= self.ranges[i][1]

    def __or__(self, other: "CharSet") -> "CharSet":
        return CharSet(self.ranges + other.ranges)

    def __and__(self, other: "CharSet") -> "CharSet":
        return ~(~self | ~other)

    def __sub__(self, other: "CharSet") -> "CharSet":
        return self & ~other

    def __invert__(self) -> "CharSet":
        out = []
        prev = 0
        for lo, hi in self.ranges:
            if lo > prev:
                out.append((prev, lo - 1))
            prev = hi + 1
        if prev <= MAX_CODEPOINT:
            out.append((prev, MAX_CODEPOINT))
        return CharSet(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, CharSet) and self.ranges == other.ranges

    def __hash__(self) -> int:
        return hash(self.ranges)

    def __bool__(self) -> bool:
        return bool(self.ranges)

    def __len__(self) -> int:
        return sum(hi - lo + 1 for lo, hi in self.ranges)

    def chars(self, limit: int = 4096) -> str:
        out = []
        for lo, hi in self.ranges:
            for cp in range(lo, min(hi, lo + limit) + 1):
                out.append(chr(cp))
                if len(out) >= limit:
                    return "".join(out)
        return "".join(out)

    def __repr__(self) -> str:
        return f"CharSet({self.ranges!r})"


def single_char_set(expr: Expr) -> Optional[CharSet]:
    """The character set of an expression matching exactly one character, else None."""
    if isinstance(expr, Char):
        return CharSet.of(expr.char)
    if isinstance(expr, CharRange):
        return CharSet.span(expr.lo, expr.hi)
    if isinstance(expr, String):
        return CharSet.of(expr.text) if len(expr.text) == 1 else None
    if isinstance(expr, Not):
        inner = single_char_set(expr.item)
        return None if inner is None else ~inner
    if isinstance(expr, Alt):
        out = CharSet()
        for branch in expr.branches:
            cs = single_char_set(branch)
            if cs is None:
                return None
            out = out | cs
        return out
    if isinstance(expr, Seq) and len(expr.items) == 1:
        return single_char_set(expr.items[0])
    return None


class _NFA:
    def __init__(self):
        self.eps = []
        self.moves = []

    def state(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1

    def build(self, expr: Expr, a: int, b: int) -> None:
        cs = single_char_set(expr)
        if cs is not None:
            self.moves[a].append((cs, b))
        elif isinstance(expr, Not):
            raise ValueError("complement of a multi-character expression")
        elif isinstance(expr, String):
            cur = a
            for ch in expr.text[:-1]:
                nxt = self.state()
                self.moves[cur].append((CharSet.of(ch), nxt))
                cur = nxt
            if expr.text:
                self.moves[cur].append((CharSet.of(expr.text[-1]), b))
            else:
                self.eps[a].append(b)
        elif isinstance(expr, Seq):
            cur = a
            for item in expr.items[:-1]:
                nxt = self.state()
                self.build(item, cur, nxt)
                cur = nxt
            if expr.items:
                self.build(expr.items[-1], cur, b)
            else:
                self.eps[a].append(b)
        elif isinstance(expr, Alt):
            for branch in expr.branches:
                s, e = self.state(), self.state()
                self.eps[a].append(s)
                self.build(branch, s, e)
                self.eps[e].append(b)
        elif isinstance(expr, Rep):
            s, e = self.state(), self.state()
            self.eps[a].append(s)
            self.build(expr.item, s, e)
            self.eps[e].append(b)
            if expr.op in "*+":
                self.eps[e].append(s)
            if expr.op in "*?":
                self.eps[a].append(b)
        else:
            raise TypeError(f"not a token expression: {expr!r}")

    def closure(self, states) -> frozenset:
        seen = set(states)
        stack = list(states)
        while stack:
            for t in self.eps[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)


class TokenMatcher:
    """Longest-match acceptor for one token, backed by a lazily built DFA."""

    def __init__(self, token: TokenDef):
        self.name = token.name
        self.keyword = token.keyword
        self.literal = token.constant
        nfa = _NFA()
        start, self._final = nfa.state(), nfa.state()
        nfa.build(token.expr, start, self._final)
        self._nfa = nfa
        self._sets = []
        self._ids = {}
        self._trans = []
        self._accepting = []
        self._start = self._intern(nfa.closure([start]))

    def _intern(self, states: frozenset) -> int:
        sid = self._ids.get(states)
        if sid is None:
            sid = len(self._sets)
            self._ids[states] = sid
            self._sets.append(states)
            self._trans.append({})
            self._accepting.append(self._final in states)
        return sid

    def _step(self, sid: int, ch: str) -> int:
        targets = [t for s in self._sets[sid] for cs, t in self._nfa.moves[s] if ch in cs]
        nxt = self._intern(self._nfa.closure(targets)) if targets else DEAD
        self._trans[sid][ch] = nxt
        return nxt

    def match(self, text: str, pos: int = 0) -> int:
        """Length of the longest match starting at ``pos``, or -1."""
        lit = self.literal
        if lit is not None:
            return len(lit) if text.startswith(lit, pos) else -1
        trans, accepting = self._trans, self._accepting
        sid = self._start
        best = 0 if accepting[sid] else -1
        i, n = pos, len(text)
        while i < n:
            ch = text[i]
            nxt = trans[sid].get(ch)
            if nxt is None:
                nxt = self._step(sid, ch)
            if nxt == DEAD:
                break
            sid = nxt
            i += 1
            if accepting[sid]:
                best = i - pos
        return best

    def accepts(self, s: str) -> bool:
        """Whole-string acceptance."""
        if self.literal is not None:
            return s == self.literal
        trans = self._trans
        sid = self._start
        for ch in s:
            nxt = trans[sid].get(ch)
            if nxt is None:
                nxt = self._step(sid, ch)
            if nxt == DEAD:
                return False
            sid = nxt
        return self._accepting[sid]

    def nullable(self) -> bool:
        return self._accepting[self._start]

    def alphabet(self) -> CharSet:
        """Every character that can occur in some accepted string (over-approximation)."""
        out = CharSet()
        for moves in self._nfa.moves:
            for cs, _ in moves:
                out = out | cs
        return out

    def _representatives(self) -> list:
        """One character per class of characters the automaton cannot tell apart."""
        cuts = {0}
        for moves in self._nfa.moves:
            for cs, _ in moves:
                for lo, hi in cs.ranges:
                    cuts.add(lo)
                    cuts.add(hi + 1)
        cuts = sorted(c for c in cuts if c <= MAX_CODEPOINT)
        bounds = cuts + [MAX_CODEPOINT + 1]
        return [(chr(lo), lo, bounds[i + 1] - 1) for i, lo in enumerate(cuts)]

    def follow_chars(self) -> CharSet:
        """Characters that can extend some already-accepted string."""
        if self.literal is not None:
            return CharSet()
        reps = self._representatives()
        seen = {self._start}
        stack = [self._start]
        out = []
        while stack:
            sid = stack.pop()
            for ch, lo, hi in reps:
                nxt = self._trans[sid].get(ch)
                if nxt is None:
                    nxt = self._step(sid, ch)
                if nxt == DEAD:
                    continue
                if self._accepting[sid]:
                    out.append((lo, hi))
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return CharSet(out)

    def first_chars(self) -> CharSet:
        out = CharSet()
        for s in self._sets[self._start]:
            for cs, _ in self._nfa.moves[s]:
                out = out | cs
        return out

    def __repr__(self) -> str:
        return f"TokenMatcher({self.name})"


def compile_token(token: TokenDef) -> TokenMatcher:
    return TokenMatcher(token)


def token_accepts(m: TokenMatcher, s: str) -> bool:
    return m.accepts(s)


def matchers(g: Grammar) -> dict:
    """Compiled matchers for every named and keyword token of ``g``, cached on ``g``."""
    cached = g._cache.get("matchers")
    if cached is None:
        cached = {t.name: TokenMatcher(t) for t in g.all_tokens}
        g._cache["matchers"] = cached
    return cached


def matcher(g: Grammar, name: str) -> TokenMatcher:
    return matchers(g)[name]


@dataclass(frozen=True)
class Token:
    name: str
    text: str
    offset: int
    line: int
    column: int


def as_text(doc: Union[str, bytes]) -> str:
    if isinstance(doc, (bytes, bytearray)):
        try:
            return bytes(doc).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TokenizeError(f"invalid UTF-8 at byte {exc.start}", exc.start) from exc
    return doc


def position(text: str, offset: int) -> tuple:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def tokenize(doc: Union[str, bytes], g: Grammar) -> list:
    """Context-free longest-match scan of ``doc`` with every token of ``g``.

    At equal length keyword literals win, then declaration order.  Offsets
    count characters (code points).
    """
    text = as_text(doc)
    ms = matchers(g)
    ordered = [ms[t.name] for t in g.keyword_tokens] + [ms[t.name] for t in g.tokens]
    out = []
    pos, line, col = 0, 1, 1
    n = len(text)
    while pos < n:
        best, best_len = None, 0
        for m in ordered:
            k = m.match(text, pos)
            if k > best_len:
                best, best_len = m, k
        if best is None:
            raise TokenizeError(
                f"no token matches at offset {pos} ({line}:{col}): {text[pos:pos + 10]!r}",
                pos, line, col,
            )
        piece = text[pos : pos + best_len]
        out.append(Token(best.name, piece, pos, line, col))
        nl = piece.count("\n")
        if nl:
            line += nl
            col = best_len - piece.rfind("\n")
        else:
            col += best_len
        pos += best_len
    assert "".join(t.text for t in out) == text
    return out
