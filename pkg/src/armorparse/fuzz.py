"""Random ASTs with hostile leaf text, and the attack-corpus harness.

Both produce reports of one ``PASS|FAIL <case-id> <detail>`` line per case
followed by a summary line.  Every case draws from its own generator seeded
by ``(seed, index)``, so reports do not depend on scheduling.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .errors import ArmorError, GrammarError
from .grammar import Alt, Char, CharRange, Grammar, Keyword, Not, Ref, Rep, Seq, String, alternatives
from .lexer import matcher, single_char_set
from .metaparser import EMPTY_MANIFEST, CompositionManifest
from .nodes import RuleNode, SubLangNode, TokenLeaf, describe_path, get_node, node_count, skeleton, to_json
from .parser import parse
from .template import Template, leaf_text, render
from .unparser import unparse
from .validation import ensure_validated, mutate

INF = math.inf
REPEAT_WEIGHTS = (0.4, 0.3, 0.2, 0.1)  # P(0..3 repetitions)
EXTRA_CHARS = "\t\n\ré€ \U0001f600"
PRINTABLE = "".join(chr(c) for c in range(0x20, 0x7F))


@dataclass(frozen=True)
class Report:
    lines: tuple
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class AstGenerator:
    """Random ASTs of bounded height for a grammar and its sub-languages.

    Height counts rule nodes and sub-language nodes; a rule whose children
    are all leaves has height 1.
    """

    def __init__(self, g: Grammar, m: CompositionManifest = EMPTY_MANIFEST):
        self.g = g
        self.m = m
        self.grammars = self._reachable(g, m)
        self.heights = self._heights()
        controls = []
        for gram in self.grammars.values():
            for table in gram.tables:
                controls.extend(table.controls)
            controls.extend(gram._cache.get("original_controls", ()))
        self.controls = sorted(set(controls))
        self.plain = PRINTABLE + EXTRA_CHARS

    def _reachable(self, g, m) -> dict:
        out = {g.name: g}
        stack = [g]
        while stack:
            cur = stack.pop()
            for tok in cur.tokens:
                if tok.subparser:
                    sub = m.sub_grammar(cur.name, tok.name)
                    if sub is None:
                        raise GrammarError(f"sub-grammar unbound for {cur.name}.{tok.name}")
                    if sub.name not in out:
                        out[sub.name] = sub
                        stack.append(sub)
        return out

    def _heights(self) -> dict:
        h = {(gn, p.name): INF for gn, gram in self.grammars.items() for p in gram.productions}
        changed = True
        while changed:
            changed = False
            for gn, gram in self.grammars.items():
                for p in gram.productions:
                    best = 1 + min(self._mh(gram, alt, h) for alt in alternatives(p.body))
                    if best < h[(gn, p.name)]:
                        h[(gn, p.name)] = best
                        changed = True
        return h

    def _mh(self, gram: Grammar, expr, h) -> float:
        """Least possible height of the children produced by ``expr``."""
        if isinstance(expr, Ref):
            if gram.production(expr.name) is not None:
                return h[(gram.name, expr.name)]
            tok = gram.token(expr.name)
            if tok.subparser:
                sub = self.m.sub_grammar(gram.name, tok.name)
                return 1 + h[(sub.name, sub.start)]
            return 0
        if isinstance(expr, Keyword):
            return 0
        if isinstance(expr, Seq):
            return max((self._mh(gram, i, h) for i in expr.items), default=0)
        if isinstance(expr, Alt):
            return min(self._mh(gram, b, h) for b in expr.branches)
        if isinstance(expr, Rep):
            return 0 if expr.op in "*?" else self._mh(gram, expr.item, h)
        raise TypeError(expr)

    def height(self, gram: Grammar, expr) -> float:
        return self._mh(gram, expr, self.heights)

    def generate(self, rng: random.Random, max_height: int) -> RuleNode:
        start = self.g.start
        if self.heights[(self.g.name, start)] > max_height:
            raise GrammarError(f"no {self.g.name} document fits within depth {max_height}")
        return self._rule(self.g, start, max_height, rng)

    def _rule(self, gram: Grammar, name: str, budget: int, rng: random.Random) -> RuleNode:
        alts = alternatives(gram.production(name).body)
        options = [i for i, a in enumerate(alts) if self.height(gram, a) <= budget - 1]
        alt = rng.choice(options)
        kids = []
        self._expand(gram, alts[alt], budget - 1, rng, kids)
        return RuleNode(name, alt, tuple(kids))

    def _expand(self, gram: Grammar, expr, budget: int, rng: random.Random, out: list) -> None:
        if isinstance(expr, Keyword):
            return
        if isinstance(expr, Ref):
            if gram.production(expr.name) is not None:
                out.append(self._rule(gram, expr.name, budget, rng))
                return
            tok = gram.token(expr.name)
            if tok.subparser:
                sub = self.m.sub_grammar(gram.name, tok.name)
                out.append(SubLangNode(tok.name, sub.name, self._rule(sub, sub.start, budget - 1, rng)))
            elif tok.constant is None:
                out.append(TokenLeaf(tok.name, self.leaf_text(gram, tok.name, rng)))
            return
        if isinstance(expr, Seq):
            for item in expr.items:
                self._expand(gram, item, budget, rng, out)
            return
        if isinstance(expr, Alt):
            options = [b for b in expr.branches if self.height(gram, b) <= budget]
            self._expand(gram, rng.choice(options), budget, rng, out)
            return
        if isinstance(expr, Rep):
            if self.height(gram, expr.item) > budget:
                count = 0
            elif expr.op == "?":
                count = rng.random() < 0.5
            else:
                count = rng.choices(range(4), REPEAT_WEIGHTS)[0] + (expr.op == "+")
            for _ in range(count):
                self._expand(gram, expr.item, budget, rng, out)
            return
        raise TypeError(expr)

    def leaf_text(self, gram: Grammar, token: str, rng: random.Random) -> str:
        if gram.table(token) is not None:
            return self.hostile_text(rng)
        return sample_token(gram, token, rng)

    def hostile_text(self, rng: random.Random) -> str:
        parts = []
        for _ in range(rng.randint(1, 12)):
            if self.controls and rng.random() < 0.5:
                parts.append(rng.choice(self.controls))
            else:
                parts.append(rng.choice(self.plain))
        return "".join(parts)


_SAMPLE_POOL = PRINTABLE + EXTRA_CHARS


def _sample(expr, rng: random.Random, out: list) -> None:
    cs = single_char_set(expr)
    if cs is not None:
        if isinstance(expr, (Char, CharRange, String)) or len(cs) < 64:
            out.append(rng.choice(cs.chars(256)))
        else:
            pool = [c for c in _SAMPLE_POOL if c in cs]
            out.append(rng.choice(pool) if pool else cs.chars(1))
    elif isinstance(expr, String):
        out.append(expr.text)
    elif isinstance(expr, Seq):
        for item in expr.items:
            _sample(item, rng, out)
    elif isinstance(expr, Alt):
        _sample(rng.choice(expr.branches), rng, out)
    elif isinstance(expr, Rep):
        if expr.op == "?":
            count = rng.random() < 0.5
        else:
            count = rng.choices(range(4), REPEAT_WEIGHTS)[0] + (expr.op == "+")
        for _ in range(count):
            _sample(expr.item, rng, out)
    elif isinstance(expr, Not):
        raise TypeError("complement of a multi-character expression")


def sample_token(g: Grammar, token: str, rng: random.Random, attempts: int = 200) -> str:
    """A random member of a token's language that is not also a keyword."""
    tok = g.token(token)
    m = matcher(g, token)
    keywords = {k.expr.text for k in g.keyword_tokens}
    for _ in range(attempts):
        out = []
        _sample(tok.expr, rng, out)
        s = "".join(out)
        if s and s not in keywords and m.accepts(s):
            return s
    raise GrammarError(f"could not sample a value for token {token}")


def apply_mutation(g: Grammar, m: CompositionManifest, recipe: str) -> tuple:
    """Apply a mutation (see :func:`validation.mutate`) to ``g`` or a grammar of ``m``.

    The token may be qualified as ``Grammar.TOKEN``; unqualified tokens are
    looked up in ``g`` first.
    """
    kind, _, rest = recipe.partition(":")
    token, sep, tail = rest.partition(":")
    gname = None
    if "." in token:
        gname, token = token.split(".", 1)
    candidates = [g] + [x for x in m.grammars.values() if x.name != g.name]
    target = None
    for cand in candidates:
        if (gname is None or cand.name == gname) and cand.table(token) is not None:
            target = cand
            break
    if target is None:
        raise GrammarError(f"token has no table: {token}")
    mutated = mutate(target, f"{kind}:{token}{sep}{tail}")
    grammars = dict(m.grammars)
    grammars[target.name] = mutated
    new_m = CompositionManifest(dict(m.bindings), grammars)
    return (mutated if target.name == g.name else g), new_m


def _short(text: str, limit: int = 200) -> str:
    r = repr(text)
    return r if len(r) <= limit else r[:limit] + "..."


def run_fuzz(
    g: Grammar,
    m: Optional[CompositionManifest] = None,
    *,
    iterations: int = 1000,
    seed: int = 0,
    max_depth: int = 8,
    hooks: Optional[Mapping] = None,
) -> Report:
    """Round-trip ``iterations`` random ASTs through unparse and parse."""
    m = m or EMPTY_MANIFEST
    if not g._cache.get("mutation"):
        ensure_validated(g)
    gen = AstGenerator(g, m)
    lines = []
    failures = 0
    width = max(5, len(str(iterations)))
    for i in range(iterations):
        case = f"case-{i:0{width}d}"
        rng = random.Random(f"{seed}:{i}")
        ast = gen.generate(rng, max_depth)
        doc = None
        try:
            doc = unparse(ast, g, m, hooks=hooks)
            back = parse(doc, g, m, hooks=hooks)
        except ArmorError as exc:
            failures += 1
            where = "unparse" if doc is None else "parse"
            lines.append(f"FAIL {case} {where} error: {exc}; ast={to_json(ast)}; document={_short(doc or '')}")
            continue
        if back != ast:
            failures += 1
            lines.append(f"FAIL {case} round-trip mismatch; ast={to_json(ast)}; document={_short(doc)}; parsed={to_json(back)}")
        else:
            lines.append(f"PASS {case} nodes={node_count(ast)} chars={len(doc)}")
    lines.append(
        f"SUMMARY fuzz grammar={g.name} cases={iterations} passed={iterations - failures} "
        f"failed={failures} seed={seed} max-depth={max_depth}"
    )
    return Report(tuple(lines), failures)


BENIGN_VALUE = "x"


def attack_test(
    t: Template,
    g: Grammar,
    m: Optional[CompositionManifest],
    payloads: Iterable[str],
    *,
    hooks: Optional[Mapping] = None,
    benign: str = BENIGN_VALUE,
) -> Report:
    """Render each payload into each marker slot alone and check the re-parse.

    A case passes when the re-parsed document has the template's skeleton
    and the targeted leaf holds the payload verbatim at the marker position.
    """
    m = m or EMPTY_MANIFEST
    payloads = list(payloads)
    lines = []
    failures = 0
    if not payloads:
        lines.append("WARN empty corpus: no payloads to test")
    expected_skeleton = skeleton(t.ast)
    bindings = {marker: benign for marker in t.markers}
    for pi, payload in enumerate(payloads):
        for si, slot in enumerate(t.slots):
            case = f"p{pi:03d}/s{si}"
            where = f"slot {slot.marker}@{describe_path(slot.path, t.ast)}"
            overrides = {(slot.path, slot.segment): payload}
            detail = None
            try:
                expected = leaf_text(t, slot.path, bindings, overrides)
                doc = render(t, bindings, g, m, hooks=hooks, overrides=overrides)
                back = parse(doc, g, m, hooks=hooks)
            except ArmorError as exc:
                detail = f"error: {exc}"
            else:
                if skeleton(back) != expected_skeleton:
                    detail = "skeleton changed"
                else:
                    got = get_node(back, slot.path)
                    if not isinstance(got, TokenLeaf) or got.text != expected:
                        text = got.text if isinstance(got, TokenLeaf) else None
                        detail = f"leaf text {_short(text or '')} != expected {_short(expected)}"
            if detail is None:
                lines.append(f"PASS {case} {where}")
            else:
                failures += 1
                lines.append(f"FAIL {case} payload={_short(payload)} {where} {detail}")
    total = len(payloads) * len(t.slots)
    lines.append(
        f"SUMMARY attack-test payloads={len(payloads)} slots={len(t.slots)} cases={total} "
        f"passed={total - failures} failed={failures}"
    )
    return Report(tuple(lines), failures)


__all__ = ["AstGenerator", "Report", "apply_mutation", "attack_test", "run_fuzz", "sample_token"]
