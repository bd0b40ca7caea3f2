"""In-memory grammar model.

A :class:`Grammar` holds productions (regular expressions over symbols),
token definitions (regular expressions over characters) and one encode
table per data token.  All values are frozen; derived lookup structures
and compiled engines are cached on the instance but never take part in
equality or hashing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


# Expression nodes.  Seq/Alt/Rep are shared by production bodies and token
# expressions; the leaves differ.


@dataclass(frozen=True)
class Ref:
    """Reference to a production or a named token."""

    name: str


@dataclass(frozen=True)
class Keyword:
    """Quoted literal inside a production body."""

    text: str


@dataclass(frozen=True)
class Char:
    char: str


@dataclass(frozen=True)
class CharRange:
    lo: str
    hi: str


@dataclass(frozen=True)
class String:
    """Double-quoted literal inside a token expression."""

    text: str


@dataclass(frozen=True)
class Not:
    """Complement of a single-character expression."""

    item: "Expr"


@dataclass(frozen=True)
class Seq:
    items: tuple


@dataclass(frozen=True)
class Alt:
    branches: tuple


@dataclass(frozen=True)
class Rep:
    item: "Expr"
    op: str  # one of "*", "+", "?"


Expr = Union[Ref, Keyword, Char, CharRange, String, Not, Seq, Alt, Rep]


def walk(expr: Expr) -> Iterator[Expr]:
    """Yield every node of an expression, pre-order."""
    yield expr
    if isinstance(expr, Seq):
        for item in expr.items:
            yield from walk(item)
    elif isinstance(expr, Alt):
        for branch in expr.branches:
            yield from walk(branch)
    elif isinstance(expr, (Rep, Not)):
        yield from walk(expr.item)


def alternatives(body: Expr) -> tuple:
    """Top-level alternatives of a production body; the AST records the index."""
    if isinstance(body, Alt):
        return body.branches
    return (body,)


@dataclass(frozen=True)
class Production:
    name: str
    body: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TokenDef:
    name: str
    expr: Expr
    subparser: bool = False
    keyword: bool = False
    line: int = field(default=0, compare=False)

    @property
    def constant(self) -> Optional[str]:
        """The single string this token matches, or None for data tokens."""
        return constant_text(self.expr)


def constant_text(expr: Expr) -> Optional[str]:
    if isinstance(expr, Char):
        return expr.char
    if isinstance(expr, String):
        return expr.text
    if isinstance(expr, CharRange) and expr.lo == expr.hi:
        return expr.lo
    if isinstance(expr, Seq):
        parts = [constant_text(item) for item in expr.items]
        if any(p is None for p in parts):
            return None
        return "".join(parts)
    if isinstance(expr, Alt) and len(expr.branches) == 1:
        return constant_text(expr.branches[0])
    return None


@dataclass(frozen=True)
class EncodeTable:
    """Ordered control -> escape rules for one token context."""

    token: str
    rules: tuple  # of (control, escape)
    line: int = field(default=0, compare=False)

    @property
    def controls(self) -> tuple:
        return tuple(c for c, _ in self.rules)

    @property
    def escapes(self) -> tuple:
        return tuple(e for _, e in self.rules)

    def without(self, control: str) -> "EncodeTable":
        return EncodeTable(self.token, tuple(r for r in self.rules if r[0] != control))

    def replace(self, control: str, escape: str) -> "EncodeTable":
        return EncodeTable(
            self.token, tuple((c, escape if c == control else e) for c, e in self.rules)
        )


def keyword_token_name(text: str) -> str:
    return json.dumps(text, ensure_ascii=False)


@dataclass(frozen=True)
class Grammar:
    name: str
    package: Optional[str] = None
    options: tuple = ()  # of (flag, int | None)
    productions: tuple = ()
    tokens: tuple = ()
    tables: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def start(self) -> Optional[str]:
        return self.productions[0].name if self.productions else None

    def production(self, name: str) -> Optional[Production]:
        return self._index("productions").get(name)

    def token(self, name: str) -> Optional[TokenDef]:
        tok = self._index("tokens").get(name)
        if tok is None:
            tok = self._index("keywords").get(name)
        return tok

    def table(self, token: str) -> Optional[EncodeTable]:
        return self._index("tables").get(token)

    @property
    def keyword_tokens(self) -> tuple:
        """Implicit tokens for the quoted literals used in productions, in first-use order."""
        return tuple(self._index("keywords").values())

    @property
    def all_tokens(self) -> tuple:
        return self.tokens + self.keyword_tokens

    def _index(self, kind: str) -> dict:
        key = ("index", kind)
        idx = self._cache.get(key)
        if idx is None:
            if kind == "keywords":
                idx = {}
                for prod in self.productions:
                    for node in walk(prod.body):
                        if isinstance(node, Keyword):
                            name = keyword_token_name(node.text)
                            idx.setdefault(name, TokenDef(name, String(node.text), keyword=True))
            else:
                idx = {}
                for item in getattr(self, kind):
                    idx.setdefault(item.token if kind == "tables" else item.name, item)
            self._cache[key] = idx
        return idx

    def with_table(self, table: EncodeTable) -> "Grammar":
        """Copy with one table replaced (or added).  The copy is not validated."""
        tables = tuple(t for t in self.tables if t.token != table.token) + (table,)
        return Grammar(self.name, self.package, self.options, self.productions, self.tokens, tables)

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        for k, v in state.items():
            object.__setattr__(self, k, v)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = f"{self.line}:{self.column or 0}: " if self.line else ""
        return f"{where}{self.severity}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class Diagnostics:
    entries: tuple = ()

    @property
    def errors(self) -> tuple:
        return tuple(d for d in self.entries if d.severity == "error")

    @property
    def warnings(self) -> tuple:
        return tuple(d for d in self.entries if d.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list:
        return [d.code for d in self.entries]

    def __add__(self, other: "Diagnostics") -> "Diagnostics":
        return Diagnostics(self.entries + other.entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)
