"""AST to document: re-emit keywords, encode and validate data tokens.

Each production alternative is compiled to a small automaton over symbols.
Unparsing a :class:`RuleNode` searches that automaton for a path that
consumes exactly its children, emitting constant tokens along the way.
Output is collected in a list and joined only after every token has been
encoded and validated, so a violation never leaves partial output behind.
"""

from __future__ import annotations

from typing import Mapping, Optional

from .codec import codec_for
from .errors import DepthError, EncodingViolation, UnparseError
from .grammar import Alt, Grammar, Keyword, Ref, Rep, Seq, alternatives, keyword_token_name
from .lexer import matchers
from .metaparser import EMPTY_MANIFEST, CompositionManifest
from .nodes import Node, RuleNode, SubLangNode, TokenLeaf
from .parser import default_max_depth
from .validation import ensure_validated

EPS, EMIT, RULE, LEAF, SUB = range(5)


class _Automaton:
    def __init__(self):
        self.edges = []

    def state(self) -> int:
        self.edges.append([])
        return len(self.edges) - 1


def _build(g: Grammar, expr, nfa: _Automaton, a: int, b: int) -> None:
    if isinstance(expr, (Ref, Keyword)):
        name = keyword_token_name(expr.text) if isinstance(expr, Keyword) else expr.name
        if g.production(name) is not None:
            nfa.edges[a].append((RULE, name, b))
            return
        tok = g.token(name)
        if tok.subparser:
            nfa.edges[a].append((SUB, name, b))
        elif tok.constant is not None:
            nfa.edges[a].append((EMIT, tok.constant, b))
        else:
            nfa.edges[a].append((LEAF, name, b))
    elif isinstance(expr, Seq):
        cur = a
        for item in expr.items:
            nxt = nfa.state()
            _build(g, item, nfa, cur, nxt)
            cur = nxt
        nfa.edges[cur].append((EPS, None, b))
    elif isinstance(expr, Alt):
        for branch in expr.branches:
            _build(g, branch, nfa, a, b)
    elif isinstance(expr, Rep):
        s, e = nfa.state(), nfa.state()
        # fewest repetitions first; the search backtracks when children remain
        if expr.op in "*?":
            nfa.edges[a].append((EPS, None, b))
        nfa.edges[a].append((EPS, None, s))
        _build(g, expr.item, nfa, s, e)
        nfa.edges[e].append((EPS, None, b))
        if expr.op in "*+":
            nfa.edges[e].append((EPS, None, s))
    else:
        raise TypeError(f"unexpected production element {expr!r}")


def _automata(g: Grammar) -> dict:
    cached = g._cache.get("unparse_automata")
    if cached is None:
        cached = {}
        for p in g.productions:
            for i, branch in enumerate(alternatives(p.body)):
                nfa = _Automaton()
                start, final = nfa.state(), nfa.state()
                _build(g, branch, nfa, start, final)
                cached[(p.name, i)] = (nfa, start, final)
        g._cache["unparse_automata"] = cached
    return cached


def _fits(kind: int, name: str, child: Node) -> bool:
    if kind == RULE:
        return isinstance(child, RuleNode) and child.rule == name
    if kind == LEAF:
        return isinstance(child, TokenLeaf) and child.token == name
    return isinstance(child, SubLangNode) and child.token == name


def _plan(nfa: _Automaton, start: int, final: int, children: tuple) -> Optional[list]:
    """Emission plan: strings to emit and child indices to recurse into."""
    n = len(children)
    dead = set()
    plan = []
    # iterative DFS; each frame is (state, index, edge cursor, plan length)
    stack = [(start, 0, 0, 0)]
    dead.add((start, 0))
    edges = nfa.edges
    while stack:
        state, idx, cursor, mark = stack[-1]
        if state == final and idx == n:
            return plan
        out = edges[state]
        advanced = False
        while cursor < len(out):
            kind, payload, target = out[cursor]
            cursor += 1
            if kind == EPS or kind == EMIT:
                nidx = idx
            elif idx < n and _fits(kind, payload, children[idx]):
                nidx = idx + 1
            else:
                continue
            if (target, nidx) in dead:
                continue
            dead.add((target, nidx))
            stack[-1] = (state, idx, cursor, mark)
            del plan[mark:]
            if kind == EMIT:
                plan.append(payload)
            elif kind != EPS:
                plan.append(idx)
            stack.append((target, nidx, 0, len(plan)))
            advanced = True
            break
        if not advanced:
            stack.pop()
            if stack:
                del plan[stack[-1][3]:]
    return None


class _Emitter:
    def __init__(self, m, hooks, max_depth):
        self.m = m
        self.hooks = hooks
        self.max_depth = max_depth

    def rule(self, node: Node, g: Grammar, path: tuple, out: list, depth: int) -> None:
        if not isinstance(node, RuleNode):
            raise UnparseError(f"expected a rule node at path {list(path)}, got {type(node).__name__}", path)
        autos = _automata(g)
        entry = autos.get((node.rule, node.alt))
        if entry is None:
            if g.production(node.rule) is None:
                raise UnparseError(f"unknown rule {node.rule} in grammar {g.name}", path)
            raise UnparseError(f"rule {node.rule} has no alternative {node.alt}", path)
        plan = _plan(*entry, node.children)
        if plan is None:
            kids = ", ".join(_label(c) for c in node.children)
            raise UnparseError(
                f"children of {node.rule} (alternative {node.alt}) do not fit the production: [{kids}]", path
            )
        for step in plan:
            if isinstance(step, str):
                out.append(step)
                continue
            child = node.children[step]
            sub_path = path + (step,)
            if isinstance(child, RuleNode):
                self.rule(child, g, sub_path, out, depth)
            elif isinstance(child, TokenLeaf):
                out.append(self.leaf(child.token, child.text, g, sub_path))
            else:
                out.append(self.sub(child, g, sub_path, depth))

    def leaf(self, token: str, text: str, g: Grammar, path: tuple) -> str:
        codec = codec_for(g, token, self.hooks)
        encoded = text if codec is None else codec.encode(text)
        m = matchers(g).get(token)
        if m is None:
            raise UnparseError(f"unknown token {token} in grammar {g.name}", path)
        if not m.accepts(encoded):
            raise EncodingViolation(token, encoded, path)
        return encoded

    def sub(self, node: SubLangNode, g: Grammar, path: tuple, depth: int) -> str:
        sub = self.m.sub_grammar(g.name, node.token)
        if sub is None:
            raise UnparseError(f"sub-grammar unbound for {g.name}.{node.token}", path)
        if sub.name != node.grammar:
            raise UnparseError(
                f"{g.name}.{node.token} is bound to {sub.name}, but the AST embeds {node.grammar}", path
            )
        if depth + 1 > self.max_depth:
            raise DepthError(f"recursion depth exceeded (limit {self.max_depth})")
        inner = []
        self.rule(node.inner, sub, path + (0,), inner, depth + 1)
        return self.leaf(node.token, "".join(inner), g, path)


def _label(node: Node) -> str:
    if isinstance(node, RuleNode):
        return node.rule
    if isinstance(node, TokenLeaf):
        return node.token
    return f"{node.token}->{node.grammar}"


def unparse(
    a: Node,
    g: Grammar,
    m: Optional[CompositionManifest] = None,
    *,
    hooks: Optional[Mapping] = None,
    max_depth: Optional[int] = None,
) -> str:
    """Serialize ``a`` as a document of ``g``; innermost sub-languages first."""
    ensure_validated(g)
    emitter = _Emitter(m or EMPTY_MANIFEST, hooks, max_depth or default_max_depth())
    out = []
    emitter.rule(a, g, (), out, 1)
    return "".join(out)


def unparse_token(leaf: TokenLeaf, g: Grammar, hooks: Optional[Mapping] = None) -> str:
    """Encode and validate one data-token leaf."""
    ensure_validated(g)
    tok = g.token(leaf.token)
    if tok is None:
        raise UnparseError(f"unknown token {leaf.token} in grammar {g.name}")
    return _Emitter(EMPTY_MANIFEST, hooks, 1).leaf(leaf.token, leaf.text, g, ())
