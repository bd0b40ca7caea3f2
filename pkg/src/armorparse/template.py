"""Templates: valid documents whose data leaves contain ``#name#`` markers.

Markers are found in decoded leaf text, so a marker may sit inside a
context that needed encoding in the raw template.  ``##`` stands for a
literal ``#``.  Rendering substitutes bound values into the AST and then
unparses it, so every value goes through the encoders of its context.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .errors import TemplateError
from .grammar import Grammar
from .metaparser import CompositionManifest
from .nodes import Node, iter_leaves, set_leaf
from .parser import parse
from .unparser import unparse

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class Slot:
    marker: str
    path: tuple
    segment: int  # index into the leaf's segment list


@dataclass(frozen=True)
class Template:
    ast: Node
    slots: tuple = ()
    # leaf path -> tuple of segments; a segment is ("text", s) or ("marker", name)
    segments: Mapping = field(default_factory=dict)

    @property
    def markers(self) -> Counter:
        return Counter(s.marker for s in self.slots)


def split_markers(text: str) -> tuple:
    """Split decoded leaf text into literal and marker segments."""
    out = []
    buf = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch != "#":
            buf.append(ch)
            i += 1
            continue
        if text.startswith("##", i):
            buf.append("#")
            i += 2
            continue
        m = _IDENT.match(text, i + 1)
        if m is None or not text.startswith("#", m.end()):
            raise TemplateError(f"malformed marker at offset {i} in {text!r}")
        if buf:
            out.append(("text", "".join(buf)))
            buf = []
        out.append(("marker", m.group()))
        i = m.end() + 1
    if buf:
        out.append(("text", "".join(buf)))
    return tuple(out)


def template_from_ast(ast: Node) -> Template:
    slots = []
    segments = {}
    for path, leaf in iter_leaves(ast):
        if "#" not in leaf.text:
            continue
        try:
            segs = split_markers(leaf.text)
        except TemplateError as exc:
            raise TemplateError(f"{exc} (leaf {leaf.token} at path {list(path)})") from None
        segments[path] = segs
        for i, (kind, value) in enumerate(segs):
            if kind == "marker":
                slots.append(Slot(value, path, i))
    return Template(ast, tuple(slots), segments)


def load_template(
    doc: Union[str, bytes], g: Grammar, m: Optional[CompositionManifest] = None, *, hooks=None
) -> Template:
    """Parse a template document and locate its markers."""
    return template_from_ast(parse(doc, g, m, hooks=hooks))


def leaf_text(t: Template, path: tuple, bindings: Mapping, overrides: Optional[Mapping] = None) -> str:
    """Text of the leaf at ``path`` after substitution.

    ``overrides`` maps ``(path, segment)`` to a value that replaces the
    binding for that single marker occurrence.
    """
    parts = []
    for i, (kind, value) in enumerate(t.segments[path]):
        if kind == "text":
            parts.append(value)
        elif overrides and (path, i) in overrides:
            parts.append(overrides[(path, i)])
        elif value in bindings:
            parts.append(bindings[value])
        else:
            raise TemplateError(f"unbound marker: {value}")
    return "".join(parts)


def instantiate(t: Template, bindings: Mapping, overrides: Optional[Mapping] = None) -> Node:
    """The template AST with every marker replaced; values are never re-scanned."""
    ast = t.ast
    for path in t.segments:
        ast = set_leaf(ast, path, leaf_text(t, path, bindings, overrides))
    return ast


def render(
    t: Template,
    bindings: Mapping,
    g: Grammar,
    m: Optional[CompositionManifest] = None,
    *,
    hooks=None,
    overrides: Optional[Mapping] = None,
) -> str:
    return unparse(instantiate(t, bindings, overrides), g, m, hooks=hooks)
