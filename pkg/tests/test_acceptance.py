"""Acceptance criteria, each run at its stated size and time bound.

Every test records one PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import contextlib
import io
import itertools
import json
import random
import re
import time


from armorparse import corpus
from armorparse.cli import main
from armorparse.codec import decode, encode
from armorparse.errors import ArmorError, EncodingViolation, ParseError
from armorparse.fuzz import apply_mutation, attack_test
from armorparse.metaparser import CompositionManifest
from armorparse.nodes import ast_equal, get_node, iter_leaves, set_leaf
from armorparse.parser import parse
from armorparse.reduction import embed_validated, validate_input
from armorparse.template import render
from armorparse.unparser import unparse

FUZZ_CONFIGS = [
    # (grammar file, manifest file, grammars involved)
    ("tag.grm", None, {"Tag"}),
    ("container.grm", "container_tag.compose", {"Container", "Tag"}),
    ("html.grm", "html_js.compose", {"HtmlMini", "JsMini"}),
]
FUZZ_SUMMARY = re.compile(r"^SUMMARY fuzz .* cases=(\d+) passed=(\d+) failed=(\d+)", re.M)


def with_mutation(grammars, recipe):
    """The corpus grammars with one table mutated; ``recipe`` names ``Grammar.TOKEN``."""
    if recipe is None:
        return grammars
    gname = recipe.split(":")[1].split(".")[0]
    _, m = apply_mutation(grammars[gname], CompositionManifest({}, dict(grammars)), recipe)
    return dict(m.grammars)


def _inverts(s, table):
    try:
        return decode(encode(s, table), table) == s
    except ArmorError:
        return False


# -- criterion checks; each returns a list of violations -------------------------


def check_exhaustive(grammars):
    table = grammars["Tag"].table("TEXT")
    strings = ["".join(p) for n in range(5) for p in itertools.product("a<>,\\", repeat=n)]
    assert len(strings) == 781
    return [s for s in strings if not _inverts(s, table)]


def check_randomized(grammars, per_table=100_000):
    pristine = corpus.load_all()
    controls = sorted({c for g in pristine.values() for t in g.tables for c in t.controls})
    alphabet = [chr(c) for c in range(0x20, 0x7F)] + controls
    bad = []
    for g in grammars.values():
        for table in g.tables:
            rng = random.Random(f"randomized:{g.name}.{table.token}")
            for _ in range(per_table):
                s = "".join(rng.choices(alphabet, k=rng.randint(0, 64)))
                if not _inverts(s, table):
                    bad.append((g.name, table.token, s))
                    break
    return bad


def _cli(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, out.getvalue()


def check_fuzz(mutation=None, iterations=10_000):
    bad = []
    for gfile, mfile, involved in FUZZ_CONFIGS:
        argv = ["fuzz", "-g", gfile, "-n", str(iterations), "-s", "42", "--max-depth", "8"]
        if mfile:
            argv += ["-c", mfile]
        if mutation and mutation.split(":")[1].split(".")[0] in involved:
            argv += ["--mutate", mutation]
        code, out = _cli(*argv)
        cases, passed, failed = map(int, FUZZ_SUMMARY.search(out).groups())
        assert cases == iterations
        if code != 0 or failed:
            bad.append(f"{gfile}: {failed} failed")
    return bad


def check_onclick(grammars):
    t, html, m = corpus.page_template(grammars)
    try:
        doc = render(t, {"name": ";alert(1)", "actionURL": "/r"}, html, m)
    except ArmorError as exc:
        return [str(exc)]
    got = corpus.onclick_before(doc, "Test1")
    return [] if got == corpus.TEST1_ONCLICK else [repr(got)]


def check_attacks(grammars, payloads):
    t, html, m = corpus.page_template(grammars)
    report = attack_test(t, html, m, payloads)
    return [line for line in report.lines if line.startswith("FAIL")]


# -- the criteria --------------------------------------------------------------


def test_codec_inverse_exhaustive(grammars, report_criterion):
    t0 = time.perf_counter()
    bad = check_exhaustive(grammars)
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    report_criterion(1, ok, f"codec inverse on 781 strings, {len(bad)} violations, {dt:.3f}s (< 1s)")
    assert not bad
    assert dt < 1.0


def test_codec_inverse_randomized(grammars, report_criterion):
    t0 = time.perf_counter()
    bad = check_randomized(grammars)
    dt = time.perf_counter() - t0
    n_tables = sum(len(g.tables) for g in grammars.values())
    ok = not bad and dt < 30.0
    report_criterion(2, ok, f"codec inverse on 10^5 random strings x {n_tables} tables, "
                            f"{len(bad)} violations, {dt:.1f}s (< 30s)")
    assert not bad
    assert dt < 30.0


def test_fuzz_round_trip(report_criterion):
    t0 = time.perf_counter()
    bad = check_fuzz()
    dt = time.perf_counter() - t0
    ok = not bad and dt < 120.0
    report_criterion(3, ok, f"fuzz 3 x 10^4 cases seed 42 depth 8, violations {bad or 0}, {dt:.1f}s (< 120s)")
    assert not bad
    assert dt < 120.0


def test_onclick_reproduction(grammars, report_criterion):
    bad = check_onclick(grammars)
    report_criterion(4, not bad, f"Test1 onclick raw text == {corpus.TEST1_ONCLICK!r}")
    assert not bad


def test_zero_xss_structural(grammars, page, xss, report_criterion):
    t = page[0]
    assert len(t.slots) == 8
    assert len(xss) >= 100
    t0 = time.perf_counter()
    bad = check_attacks(grammars, xss)
    dt = time.perf_counter() - t0
    cases = len(xss) * len(t.slots)
    ok = not bad and dt < 60.0
    report_criterion(5, ok, f"{len(xss)} payloads x {len(t.slots)} slots = {cases} cases, "
                            f"{cases - len(bad)} passed, {dt:.1f}s (< 60s)")
    assert not bad, bad[:5]
    assert dt < 60.0


def test_composition_ordering(container, ct, report_criterion):
    doc = "{tags{<x\\,y>}}"
    ast = parse(doc, container, ct)
    inner_path = (0, 0, 0, 0, 0)
    checks = {
        "inner TEXT decoded": get_node(ast, inner_path).text == "x,y",
        "byte-exact unparse": unparse(ast, container, ct) == doc,
    }
    hostile = set_leaf(ast, inner_path, "x{y} &z,<w>")
    out = unparse(hostile, container, ct)
    checks["outer control encoded"] = "{" not in out[len("{tags{"):-2]
    checks["two-level round trip"] = ast_equal(parse(out, container, ct), hostile)
    failed = [k for k, v in checks.items() if not v]
    report_criterion(6, not failed, "composition: " + ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()))
    assert not failed


def test_stop_on_violation(grammars, page, tmp_path, report_criterion):
    # the tag grammar through the CLI mutation flag
    ast = {"rule": "Tags", "alt": 0, "children": [
        {"rule": "Tag", "alt": 0, "children": [{"token": "TEXT", "text": "a<b"}]}]}
    f = tmp_path / "ast.json"
    f.write_text(json.dumps(ast))
    err = io.StringIO()
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(["unparse", "-g", "tag.grm", "--mutate", "drop-rule:TEXT:<", str(f)])
    cli_ok = code == 1 and out.getvalue() == "" and "post-encode validation failed" in err.getvalue()

    # the html tag body, through the library
    t, html, m = page
    mutated = with_mutation(grammars, "drop-rule:HtmlMini.TEXT:<")
    body = next(p for p, leaf in iter_leaves(t.ast) if leaf.text == "#name#" and leaf.token == "TEXT")
    a = set_leaf(t.ast, body, "<b>bold</b>")
    try:
        unparse(a, mutated["HtmlMini"], corpus.manifest("html_js", mutated))
        lib_ok = False
    except EncodingViolation:
        lib_ok = True
    report_criterion(7, cli_ok and lib_ok, f"dropped '<' rule stops unparse: cli exit {code}, "
                                           f"no output {out.getvalue() == ''}, html body refused {lib_ok}")
    assert cli_ok and lib_ok


MUTATIONS = ["drop-rule:Tag.TEXT:<", "collide:Tag.TEXT:<:>", "drop-lead:Tag.TEXT"]


def test_mutation_sensitivity(grammars, xss, report_criterion):
    red = {}
    for recipe in MUTATIONS:
        gs = with_mutation(grammars, recipe)
        checks = [
            (1, lambda: check_exhaustive(gs)),
            (2, lambda: check_randomized(gs)),
            (3, lambda: check_fuzz(recipe)),
            (4, lambda: check_onclick(gs)),
            (5, lambda: check_attacks(gs, xss)),
        ]
        red[recipe] = None
        for number, check in checks:
            if check():
                red[recipe] = number
                break
    ok = all(red.values())
    detail = "; ".join(f"{recipe} -> criterion {n} red" if n else f"{recipe} -> all green" for recipe, n in red.items())
    report_criterion(8, ok, detail)
    assert ok, red


def test_reduction(reduced, container, grammars, report_criterion):
    accepted = validate_input("<a>,<b>", reduced)
    try:
        validate_input("<a\\,b>", reduced)
        rejected = False
    except ParseError:
        rejected = True
    results = {}
    for mname in ("container_reduced", "container_tag"):
        m = corpus.manifest(mname, grammars)
        target = parse("{tags{<z>}}", container, m)
        out = unparse(embed_validated(accepted, reduced, target, (0, 0), m), container, m)
        results[mname] = get_node(parse(out, container, m), (0, 0)).inner == accepted and out == "{tags{<a>,<b>}}"
    ok = rejected and all(results.values())
    report_criterion(9, ok, f"reduced grammar accepts '<a>,<b>', rejects '<a\\,b>' {rejected}, "
                            f"embedded fragment unchanged {results}")
    assert ok
