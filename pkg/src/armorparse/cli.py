"""Command-line front end.

Exit codes: 0 success, 1 domain failure, 2 usage error.  Documents and
reports go to standard output, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import corpus
from .errors import ArmorError, GrammarSyntaxError
from .fuzz import apply_mutation, attack_test, run_fuzz
from .grammar import Grammar
from .metaparser import parse_grammar, resolve_manifest
from .nodes import from_json, to_json
from .parser import parse
from .template import load_template, render
from .unparser import unparse
from .validation import check_table_completeness, ensure_validated, validate_grammar

_BIND_ESC = re.compile(r"\\(u[0-9A-Fa-f]{4}|n|\\)")


class CliError(Exception):
    """A domain failure to report on stderr with exit code 1."""


def _resolve_file(name: str, subdir: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    bundled = corpus.path(subdir, p.name)
    if not p.is_absolute() and p.parent == Path(".") and bundled.exists():
        return bundled
    raise CliError(f"file not found: {name}")


def _read(p: Path) -> str:
    try:
        return p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {p}: {exc}") from None


def _read_input(name: Optional[str]) -> bytes:
    if name is None or name == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(name).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {name}: {exc}") from None


def _load_grammar_file(p: Path) -> Grammar:
    try:
        return parse_grammar(_read(p))
    except GrammarSyntaxError as exc:
        raise CliError(f"{p}:{exc}") from None


def _language(args) -> tuple:
    """Main grammar and manifest from ``-g``, ``-c`` and ``--with``."""
    gpath = _resolve_file(args.grammar, "grammars")
    main = _load_grammar_file(gpath)
    available = {}
    dirs = {gpath.parent}
    mpath = _resolve_file(args.manifest, "manifests") if args.manifest else None
    if mpath is not None:
        dirs.add(mpath.parent)
        dirs.add(corpus.path("grammars"))
    for d in sorted(dirs):
        for f in sorted(d.glob("*.grm")):
            try:
                g = parse_grammar(f.read_text(encoding="utf-8"))
            except (GrammarSyntaxError, OSError, UnicodeDecodeError):
                continue
            available.setdefault(g.name, g)
    for extra in args.with_grammar or ():
        g = _load_grammar_file(_resolve_file(extra, "grammars"))
        available[g.name] = g
    available[main.name] = main
    ensure_validated(main)
    if mpath is not None:
        m = resolve_manifest(_read(mpath), available, extra=[main.name])
    else:
        m = resolve_manifest("compose { }", {main.name: main})
    for g in m.grammars.values():
        ensure_validated(g)
    mutation = getattr(args, "mutate", None)
    if mutation:
        main, m = apply_mutation(main, m, mutation)
    return main, m


def _strip_newline(data: bytes) -> bytes:
    if data.endswith(b"\r\n"):
        return data[:-2]
    if data.endswith(b"\n"):
        return data[:-1]
    return data


def _write(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def cmd_check(args) -> int:
    failed = False
    for name in args.files:
        p = _resolve_file(name, "grammars")
        try:
            g = parse_grammar(_read(p))
        except GrammarSyntaxError as exc:
            print(f"{p}:{exc}", file=sys.stderr)
            failed = True
            continue
        bad = False
        diags = validate_grammar(g)
        if diags.ok:
            for table in g.tables:
                diags = diags + check_table_completeness(g, table.token, args.extra_chars)
        for d in diags:
            if args.strict and d.code == "uncovered-control":
                d = replace(d, severity="error")
            print(f"{p}: {d}", file=sys.stderr)
            bad = bad or d.severity == "error"
        failed = failed or bad
        if not bad:
            print(f"{p}: grammar {g.name} ok", file=sys.stderr)
    return 1 if failed else 0


def cmd_parse(args) -> int:
    g, m = _language(args)
    data = _read_input(args.input)
    if not args.exact:
        data = _strip_newline(data)
    ast = parse(data, g, m)
    _write(to_json(ast, indent=None if args.compact else 2) + "\n")
    return 0


def cmd_unparse(args) -> int:
    g, m = _language(args)
    raw = _read_input(args.input)
    try:
        ast = from_json(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CliError(f"invalid AST file: {exc}") from None
    doc = unparse(ast, g, m)
    _write(doc if args.exact else doc + "\n")
    return 0


def _unescape_value(value: str) -> str:
    def sub(m):
        code = m.group(1)
        if code == "n":
            return "\n"
        if code == "\\":
            return "\\"
        return chr(int(code[1:], 16))

    return _BIND_ESC.sub(sub, value)


def _bindings(args) -> dict:
    out = {}
    if args.bind_file:
        for n, line in enumerate(_read(Path(args.bind_file)).split("\n"), 1):
            line = line.rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            name, sep, value = line.partition("=")
            if not sep:
                raise CliError(f"{args.bind_file}:{n}: expected name=value")
            out[name.strip()] = _unescape_value(value)
    for item in args.bind or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--bind expects name=value, got {item!r}")
        out[name] = value
    return out


def cmd_render(args) -> int:
    g, m = _language(args)
    text = _read(_resolve_file(args.template, "templates"))
    t = load_template(text, g, m)
    _write(render(t, _bindings(args), g, m))
    return 0


def cmd_fuzz(args) -> int:
    g, m = _language(args)
    report = run_fuzz(g, m, iterations=args.iterations, seed=args.seed, max_depth=args.max_depth)
    _write(report.text)
    return 0 if report.ok else 1


def cmd_attack_test(args) -> int:
    g, m = _language(args)
    t = load_template(_read(_resolve_file(args.template, "templates")), g, m)
    payloads = corpus.read_payloads(_read(_resolve_file(args.attacks, "attacks")))
    if not payloads:
        print("warning: empty corpus: no attack payloads", file=sys.stderr)
    report = attack_test(t, g, m, payloads)
    _write(report.text)
    return 0 if report.ok else 1


def cmd_selftest(args) -> int:
    payloads = corpus.read_payloads(_read(_resolve_file(args.attacks, "attacks"))) if args.attacks else None
    diags = corpus.corpus_selftest(payloads, args.mutate, args.fuzz_cases)
    for d in diags:
        print(str(d), file=sys.stderr)
    print("selftest " + ("passed" if diags.ok else f"failed with {len(diags.errors)} error(s)"), file=sys.stderr)
    return 0 if diags.ok else 1


def _language_args(p: argparse.ArgumentParser, mutate: bool = False) -> None:
    p.add_argument("-g", "--grammar", required=True, help="grammar file (.grm)")
    p.add_argument("-c", "--compose", dest="manifest", help="composition manifest (.compose)")
    p.add_argument(
        "--with", dest="with_grammar", action="append", metavar="FILE", help="extra grammar file for the manifest"
    )
    if mutate:
        p.add_argument("--mutate", metavar="SPEC", help="break a table: drop-rule:TOKEN:C, collide:TOKEN:C1:C2, drop-lead:TOKEN")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="armorparse", description="Grammar-driven encoding, parsing and unparsing.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate grammar files")
    p.add_argument("files", nargs="+")
    p.add_argument("--strict", action="store_true", help="treat uncovered control characters as errors")
    p.add_argument("--extra-chars", default="", help="characters added to the completeness alphabet")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("parse", help="document to AST (JSON)")
    _language_args(p)
    p.add_argument("input", nargs="?", help="document file (default: stdin)")
    p.add_argument("--exact", action="store_true", help="keep a trailing newline as part of the document")
    p.add_argument("--compact", action="store_true", help="single-line JSON")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("unparse", help="AST (JSON) to document")
    _language_args(p, mutate=True)
    p.add_argument("input", nargs="?", help="AST file (default: stdin)")
    p.add_argument("--exact", action="store_true", help="do not append a newline")
    p.set_defaults(func=cmd_unparse)

    p = sub.add_parser("render", help="fill a template's markers")
    _language_args(p, mutate=True)
    p.add_argument("-t", "--template", required=True)
    p.add_argument("--bind", action="append", metavar="NAME=VALUE")
    p.add_argument("--bind-file", metavar="FILE", help="name=value lines; \\n, \\\\ and \\uHHHH escapes")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("fuzz", help="round-trip random ASTs with hostile leaf text")
    _language_args(p, mutate=True)
    p.add_argument("-n", "--iterations", type=int, default=1000)
    p.add_argument("-s", "--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=8)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("attack-test", help="render every payload into every marker slot")
    _language_args(p, mutate=True)
    p.add_argument("-t", "--template", required=True)
    p.add_argument("attacks", help="payload file, one per line")
    p.set_defaults(func=cmd_attack_test)

    p = sub.add_parser("selftest", help="run the bundled corpus scenarios")
    p.add_argument("--attacks", help="payload file replacing the bundled one")
    p.add_argument("--mutate", metavar="SPEC")
    p.add_argument("--fuzz-cases", type=int, default=200)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "iterations", 1) < 0 or getattr(args, "max_depth", 1) < 1:
        print("armorparse: error: counts must be positive", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CliError, ArmorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
