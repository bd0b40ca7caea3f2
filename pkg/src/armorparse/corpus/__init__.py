"""Bundled grammars, manifests, templates and attack payloads."""

from __future__ import annotations

import re
from collections import Counter
from itertools import product
from pathlib import Path
from typing import Iterable, Optional

from .. import codec
from ..errors import ArmorError
from ..fuzz import apply_mutation, attack_test, run_fuzz
from ..grammar import Diagnostic, Diagnostics, Grammar
from ..metaparser import CompositionManifest, parse_grammar, resolve_manifest
from ..nodes import get_node
from ..parser import parse
from ..template import Template, load_template, render
from ..unparser import unparse
from ..validation import check_table_completeness, ensure_validated, validate_grammar

CORPUS_DIR = Path(__file__).resolve().parent
GRAMMARS = ("tag", "container", "reduced_tag", "html", "js")
PAGE_MARKERS = Counter({"actionURL": 1, "name": 7})
TEST1_ONCLICK = "alert('&quot;;alert(1)&quot;');"

_UESC = re.compile(r"\\u([0-9A-Fa-f]{4})")


def path(*parts: str) -> Path:
    return CORPUS_DIR.joinpath(*parts)


def grammar_text(name: str) -> str:
    return path("grammars", f"{name}.grm").read_text(encoding="utf-8")


def load(name: str) -> Grammar:
    """A bundled grammar by file stem (``tag``, ``html``, ...), validated."""
    return ensure_validated(parse_grammar(grammar_text(name)))


def load_all() -> dict:
    """Every bundled grammar keyed by grammar name."""
    out = {}
    for stem in GRAMMARS:
        g = load(stem)
        out[g.name] = g
    return out


def manifest(name: str, grammars: Optional[dict] = None) -> CompositionManifest:
    """A bundled manifest (``container_tag``, ``html_js``, ``container_reduced``)."""
    text = path("manifests", f"{name}.compose").read_text(encoding="utf-8")
    return resolve_manifest(text, grammars or load_all())


def template_text(name: str = "page") -> str:
    return path("templates", f"{name}.tpl").read_text(encoding="utf-8")


def read_payloads(text: str) -> list:
    """One payload per line; ``\\uHHHH`` is the only escape; blank lines are skipped."""
    out = []
    for line in text.split("\n"):
        line = line.rstrip("\r")
        if not line:
            continue
        out.append(_UESC.sub(lambda m: chr(int(m.group(1), 16)), line))
    return out


def attacks(name: str = "xss") -> list:
    return read_payloads(path("attacks", f"{name}.txt").read_text(encoding="utf-8"))


def page_template(grammars: Optional[dict] = None) -> tuple:
    """``(template, html grammar, manifest)`` for the example page."""
    grammars = grammars or load_all()
    m = manifest("html_js", grammars)
    g = grammars["HtmlMini"]
    return load_template(template_text("page"), g, m), g, m


def onclick_before(doc: str, label: str) -> Optional[str]:
    """Raw onclick attribute text of the button whose body is ``label``."""
    found = re.search(r'onclick="([^"]*)"\s*>' + re.escape(label) + "<", doc)
    return found.group(1) if found else None


def exhaustive_strings(alphabet: str, max_len: int) -> Iterable[str]:
    for n in range(max_len + 1):
        for combo in product(alphabet, repeat=n):
            yield "".join(combo)


def _mutated(grammars: dict, recipe: str) -> dict:
    out = dict(grammars)
    kind, _, rest = recipe.partition(":")
    token = rest.split(":", 1)[0]
    gname = token.split(".", 1)[0] if "." in token else None
    for g in grammars.values():
        if gname in (None, g.name) and g.table(token.split(".")[-1]) is not None:
            mutated, m = apply_mutation(g, CompositionManifest({}, {g.name: g}), recipe)
            out[g.name] = mutated
            return out
    raise ArmorError(f"no bundled grammar has a table for {token}")


def corpus_selftest(
    payloads: Optional[list] = None, mutation: Optional[str] = None, fuzz_cases: int = 200
) -> Diagnostics:
    """Run the corpus scenarios; failures come back as error diagnostics."""
    entries = []

    def fail(code: str, message: str) -> None:
        entries.append(Diagnostic("error", code, message))

    def warn(code: str, message: str) -> None:
        entries.append(Diagnostic("warning", code, message))

    grammars = load_all()
    for g in grammars.values():
        for d in validate_grammar(g).errors:
            fail("grammar", f"{g.name}: {d}")
        for table in g.tables:
            for d in check_table_completeness(g, table.token):
                warn(d.code, f"{g.name}: {d.message}")
    if mutation:
        grammars = _mutated(grammars, mutation)

    tag = grammars["Tag"]
    table = tag.table("TEXT")
    for s in exhaustive_strings("a<>,\\", 4):
        try:
            ok = codec.decode(codec.encode(s, table), table) == s
        except ArmorError:
            ok = False
        if not ok:
            fail("codec", f"Tag TEXT table does not invert on {s!r}")
            break

    try:
        ct = manifest("container_tag", grammars)
        container = grammars["Container"]
        doc = "{tags{<x\\,y>}}"
        ast = parse(doc, container, ct)
        inner = get_node(ast, (0, 0, 0, 0, 0))
        if inner.text != "x,y" or unparse(ast, container, ct) != doc:
            fail("composition", f"{doc} does not round-trip through both levels")
    except ArmorError as exc:
        fail("composition", f"two-level example failed: {exc}")

    try:
        t, html, hj = page_template(grammars)
    except ArmorError as exc:
        fail("template", f"page template does not load: {exc}")
        return Diagnostics(tuple(entries))
    if t.markers != PAGE_MARKERS:
        fail("template", f"page template markers {dict(t.markers)} != {dict(PAGE_MARKERS)}")

    try:
        doc = render(t, {"name": ";alert(1)", "actionURL": "/r"}, html, hj)
        got = onclick_before(doc, "Test1")
        if got != TEST1_ONCLICK:
            fail("onclick", f"Test1 onclick is {got!r}, expected {TEST1_ONCLICK!r}")
    except ArmorError as exc:
        fail("onclick", f"rendering ;alert(1) failed: {exc}")

    try:
        doc = render(t, {"name": "<i>x</i>", "actionURL": "/r"}, html, hj)
        if "<p>&lt;i&gt;x&lt;/i&gt;</p>" not in doc:
            fail("text-body", "<i>x</i> is not entity-encoded in the <p> body")
    except ArmorError as exc:
        fail("text-body", f"rendering <i>x</i> failed: {exc}")

    if payloads is None:
        payloads = attacks("xss")
    if not payloads:
        warn("empty-corpus", "empty corpus: no attack payloads")
    report = attack_test(t, html, hj, payloads)
    for line in report.lines:
        if line.startswith("FAIL"):
            fail("attack", line)

    runs = [(tag, CompositionManifest({}, {"Tag": tag})), (grammars["Container"], manifest("container_tag", grammars)), (html, hj)]
    for g, m in runs:
        report = run_fuzz(g, m, iterations=fuzz_cases, seed=42, max_depth=8)
        for line in report.lines:
            if line.startswith("FAIL"):
                fail("fuzz", line)
    return Diagnostics(tuple(entries))


__all__ = [
    "CORPUS_DIR",
    "TEST1_ONCLICK",
    "PAGE_MARKERS",
    "Template",
    "attacks",
    "corpus_selftest",
    "exhaustive_strings",
    "grammar_text",
    "load",
    "load_all",
    "manifest",
    "onclick_before",
    "page_template",
    "read_payloads",
    "template_text",
]
