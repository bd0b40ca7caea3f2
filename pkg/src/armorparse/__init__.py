"""Injection-safe parsing and unparsing driven by grammars with encoding tables.

Typical use::

    from armorparse import load_grammar, parse, unparse
    g = load_grammar(text)
    ast = parse("<a\\,b>", g)
    assert unparse(ast, g) == "<a\\,b>"
"""

from .codec import TokenCodec, decode, encode
from .errors import (
    AmbiguityError,
    ArmorError,
    DecodeError,
    DepthError,
    EncodingViolation,
    GrammarError,
    GrammarSyntaxError,
    ManifestError,
    ParseError,
    PathError,
    TemplateError,
    TokenizeError,
    UnparseError,
)
from .grammar import Diagnostic, Diagnostics, EncodeTable, Grammar
from .lexer import Token, TokenMatcher, compile_token, token_accepts, tokenize
from .metaparser import (
    EMPTY_MANIFEST,
    CompositionManifest,
    format_grammar,
    parse_grammar,
    parse_manifest,
    resolve_manifest,
)
from .nodes import (
    RuleNode,
    SubLangNode,
    TokenLeaf,
    ast_equal,
    from_json,
    get_node,
    set_leaf,
    skeleton,
    to_json,
)
from .parser import parse
from .reduction import ReductionError, embed_validated, validate_input
from .template import Slot, Template, load_template, render
from .unparser import unparse, unparse_token
from .validation import check_table_completeness, load_grammar, mutate, validate_grammar

__all__ = [
    "AmbiguityError",
    "ArmorError",
    "CompositionManifest",
    "DecodeError",
    "DepthError",
    "Diagnostic",
    "Diagnostics",
    "EMPTY_MANIFEST",
    "EncodeTable",
    "EncodingViolation",
    "Grammar",
    "GrammarError",
    "GrammarSyntaxError",
    "ManifestError",
    "ParseError",
    "PathError",
    "ReductionError",
    "RuleNode",
    "Slot",
    "SubLangNode",
    "Template",
    "TemplateError",
    "Token",
    "TokenCodec",
    "TokenLeaf",
    "TokenMatcher",
    "TokenizeError",
    "UnparseError",
    "ast_equal",
    "check_table_completeness",
    "compile_token",
    "decode",
    "embed_validated",
    "encode",
    "format_grammar",
    "from_json",
    "get_node",
    "load_grammar",
    "load_template",
    "mutate",
    "parse",
    "parse_grammar",
    "parse_manifest",
    "render",
    "resolve_manifest",
    "set_leaf",
    "skeleton",
    "to_json",
    "token_accepts",
    "tokenize",
    "unparse",
    "unparse_token",
    "validate_grammar",
    "validate_input",
]
