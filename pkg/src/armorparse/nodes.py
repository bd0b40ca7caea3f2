"""AST values, skeletons, paths and the JSON interchange format.

A path is a tuple of child indices.  At a :class:`RuleNode` an index
selects a child; at a :class:`SubLangNode` the only valid step is 0, which
enters the embedded document's root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import PathError


@dataclass(frozen=True)
class RuleNode:
    rule: str
    alt: int
    children: tuple = ()


@dataclass(frozen=True)
class TokenLeaf:
    token: str
    text: str  # decoded


@dataclass(frozen=True)
class SubLangNode:
    token: str
    grammar: str
    inner: "Node"


Node = Union[RuleNode, TokenLeaf, SubLangNode]


def skeleton(node: Node) -> tuple:
    """The tree with all leaf text erased."""
    if isinstance(node, TokenLeaf):
        return ("token", node.token)
    if isinstance(node, SubLangNode):
        return ("sub", node.token, node.grammar, skeleton(node.inner))
    return ("rule", node.rule, node.alt, tuple(skeleton(c) for c in node.children))


def ast_equal(a: Node, b: Node) -> bool:
    # frozen dataclasses compare structurally, SubLangNode included
    return a == b


def get_node(root: Node, path: tuple) -> Node:
    node = root
    for depth, step in enumerate(path):
        if isinstance(node, RuleNode):
            if not 0 <= step < len(node.children):
                raise PathError(f"bad path {describe_path(path)}: no child {step} at depth {depth}")
            node = node.children[step]
        elif isinstance(node, SubLangNode):
            if step != 0:
                raise PathError(f"bad path {describe_path(path)}: sub-language node has only child 0")
            node = node.inner
        else:
            raise PathError(f"bad path {describe_path(path)}: token leaf has no children")
    return node


def replace_at(root: Node, path: tuple, new: Node) -> Node:
    """Copy of ``root`` with the node at ``path`` replaced by ``new``."""
    if not path:
        return new
    step, rest = path[0], path[1:]
    if isinstance(root, RuleNode):
        if not 0 <= step < len(root.children):
            raise PathError(f"bad path: no child {step} under {root.rule}")
        kids = list(root.children)
        kids[step] = replace_at(kids[step], rest, new)
        return RuleNode(root.rule, root.alt, tuple(kids))
    if isinstance(root, SubLangNode):
        if step != 0:
            raise PathError("bad path: sub-language node has only child 0")
        return SubLangNode(root.token, root.grammar, replace_at(root.inner, rest, new))
    raise PathError("bad path: token leaf has no children")


def set_leaf(root: Node, path: tuple, text: str) -> Node:
    """Copy of ``root`` with the decoded text of the leaf at ``path`` replaced."""
    leaf = get_node(root, path)
    if not isinstance(leaf, TokenLeaf):
        raise PathError(f"bad path {describe_path(path)}: not a token leaf")
    return replace_at(root, path, TokenLeaf(leaf.token, text))


def iter_leaves(root: Node, path: tuple = ()) -> Iterator[tuple]:
    """Yield ``(path, leaf)`` for every TokenLeaf, descending into sub-languages."""
    if isinstance(root, TokenLeaf):
        yield path, root
    elif isinstance(root, SubLangNode):
        yield from iter_leaves(root.inner, path + (0,))
    else:
        for i, child in enumerate(root.children):
            yield from iter_leaves(child, path + (i,))


def describe_path(path: tuple, root: Node = None) -> str:
    """Human-readable path; with ``root`` the steps are labelled by node names."""
    if root is None:
        return "/" + "/".join(str(i) for i in path)
    parts = []
    node = root
    for step in path:
        if isinstance(node, RuleNode):
            parts.append(f"{node.rule}[{step}]")
            node = node.children[step]
        elif isinstance(node, SubLangNode):
            parts.append(f"{node.token}->{node.grammar}")
            node = node.inner
    if isinstance(node, TokenLeaf):
        parts.append(node.token)
    elif isinstance(node, RuleNode):
        parts.append(node.rule)
    return "/".join(parts)


def node_count(root: Node) -> int:
    if isinstance(root, TokenLeaf):
        return 1
    if isinstance(root, SubLangNode):
        return 1 + node_count(root.inner)
    return 1 + sum(node_count(c) for c in root.children)


def to_obj(node: Node):
    if isinstance(node, TokenLeaf):
        return {"token": node.token, "text": node.text}
    if isinstance(node, SubLangNode):
        return {"subparser": node.token, "grammar": node.grammar, "ast": to_obj(node.inner)}
    return {"rule": node.rule, "alt": node.alt, "children": [to_obj(c) for c in node.children]}


def from_obj(obj) -> Node:
    if not isinstance(obj, dict):
        raise ValueError(f"AST node must be an object, got {type(obj).__name__}")
    keys = set(obj)
    if keys == {"token", "text"}:
        if not isinstance(obj["token"], str) or not isinstance(obj["text"], str):
            raise ValueError("token leaf needs string 'token' and 'text'")
        return TokenLeaf(obj["token"], obj["text"])
    if keys == {"subparser", "grammar", "ast"}:
        if not isinstance(obj["subparser"], str) or not isinstance(obj["grammar"], str):
            raise ValueError("sub-language node needs string 'subparser' and 'grammar'")
        return SubLangNode(obj["subparser"], obj["grammar"], from_obj(obj["ast"]))
    if keys == {"rule", "alt", "children"}:
        alt = obj["alt"]
        if not isinstance(obj["rule"], str) or not isinstance(alt, int) or isinstance(alt, bool):
            raise ValueError("rule node needs string 'rule' and integer 'alt'")
        if not isinstance(obj["children"], list):
            raise ValueError("rule node 'children' must be a list")
        return RuleNode(obj["rule"], alt, tuple(from_obj(c) for c in obj["children"]))
    raise ValueError(f"unrecognised AST node with keys {sorted(keys)}")


def to_json(node: Node, indent=None) -> str:
    return json.dumps(to_obj(node), ensure_ascii=True, indent=indent)


def from_json(text: str) -> Node:
    return from_obj(json.loads(text))
