"""Accepting user fragments only through a reduced grammar.

A reduced grammar is a hand-written subset of a language.  Input that
parses under it uses only the permitted features; the resulting fragment
can then be placed into an output AST, either grafted as a sub-language
or flattened into a data leaf that the outer encoder will escape.
"""

from __future__ import annotations

from typing import Optional, Union

from .errors import ArmorError, ParseError, PathError
from .grammar import Grammar
from .metaparser import EMPTY_MANIFEST, CompositionManifest
from .nodes import Node, SubLangNode, TokenLeaf, ast_equal, get_node, replace_at
from .parser import parse
from .unparser import unparse


class ReductionError(ArmorError):
    pass


def validate_input(
    doc: Union[str, bytes], reduced: Grammar, m: Optional[CompositionManifest] = None
) -> Node:
    """Parse ``doc`` with the reduced grammar; any parse error rejects it."""
    return parse(doc, reduced, m)


def embed_validated(
    fragment: Node,
    reduced: Grammar,
    target: Node,
    path: tuple,
    m: Optional[CompositionManifest] = None,
) -> Node:
    """Place a validated fragment at ``path`` in ``target``.

    At a sub-language slot the fragment is re-read with the grammar bound to
    that slot and must come out unchanged; it then replaces the embedded
    document.  At a plain data leaf the fragment's text becomes the leaf
    text and is escaped on output like any other data.
    """
    m = m or EMPTY_MANIFEST
    slot = get_node(target, path)
    text = unparse(fragment, reduced, m)
    if isinstance(slot, TokenLeaf):
        return replace_at(target, path, TokenLeaf(slot.token, text))
    if not isinstance(slot, SubLangNode):
        raise PathError(f"path {list(path)} addresses neither a data leaf nor a sub-language slot")
    bound = m.grammar(slot.grammar)
    if bound is None:
        raise ReductionError(f"slot grammar {slot.grammar} is not in the manifest")
    try:
        reread = parse(text, bound, m)
    except ParseError as exc:
        raise ReductionError(
            f"grammar mismatch: {reduced.name} fragment is not a {bound.name} document ({exc})"
        ) from None
    if not ast_equal(reread, fragment):
        raise ReductionError(f"grammar mismatch: {reduced.name} fragment reads differently under {bound.name}")
    return replace_at(target, path, SubLangNode(slot.token, slot.grammar, fragment))
