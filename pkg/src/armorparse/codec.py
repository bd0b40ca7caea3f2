"""Context-sensitive encoding and decoding of data-token text.

Both directions make one left-to-right pass and replace the longest
matching control (encode) or escape (decode); ties go to the rule declared
first.  Decoding is strict: a lead character that does not start a
complete escape is an error rather than being copied through.
"""

from __future__ import annotations

import re
from typing import Callable, Mapping, NamedTuple, Optional

from .errors import DecodeError
from .grammar import EncodeTable, Grammar


class _Compiled:
    __slots__ = ("encode_re", "encode_map", "decode_re", "decode_map", "translate")

    def __init__(self, table: EncodeTable):
        rules = list(table.rules)
        # stable sort: longest first, ties keep declaration order
        by_control = sorted(range(len(rules)), key=lambda i: -len(rules[i][0]))
        by_escape = sorted(range(len(rules)), key=lambda i: -len(rules[i][1]))
        self.encode_map = {}
        for i in by_control:
            self.encode_map.setdefault(rules[i][0], rules[i][1])
        self.decode_map = {}
        for i in by_escape:
            self.decode_map.setdefault(rules[i][1], rules[i][0])
        self.translate = None
        if rules and all(len(c) == 1 for c, _ in rules):
            self.translate = {ord(c): e for c, e in self.encode_map.items()}
        self.encode_re = (
            re.compile("|".join(re.escape(rules[i][0]) for i in by_control)) if rules else None
        )
        leads = sorted({e[0] for _, e in rules if e})
        if rules:
            escapes = "|".join(re.escape(rules[i][1]) for i in by_escape)
            lead_class = "[" + "".join(re.escape(c) for c in leads) + "]"
            self.decode_re = re.compile(f"({escapes})|({lead_class})")
        else:
            self.decode_re = None


def _compiled(table: EncodeTable) -> _Compiled:
    # EncodeTable is frozen and hashable; keep a small module-level cache
    c = _CACHE.get(table)
    if c is None:
        if len(_CACHE) > 256:
            _CACHE.clear()
        c = _CACHE[table] = _Compiled(table)
    return c


_CACHE: dict = {}


def encode(s: str, t: EncodeTable) -> str:
    c = _compiled(t)
    if c.translate is not None:
        return s.translate(c.translate)
    if c.encode_re is None:
        return s
    return c.encode_re.sub(lambda m: c.encode_map[m.group()], s)


def decode(s: str, t: EncodeTable) -> str:
    c = _compiled(t)
    if c.decode_re is None:
        return s
    out = []
    last = 0
    for m in c.decode_re.finditer(s):
        if m.group(2) is not None:
            raise DecodeError(f"dangling escape lead at offset {m.start()}", m.start())
        out.append(s[last : m.start()])
        out.append(c.decode_map[m.group(1)])
        last = m.end()
    out.append(s[last:])
    return "".join(out)


class TokenCodec(NamedTuple):
    """Externally supplied encoder/decoder pair replacing a table-derived codec."""

    encode: Callable[[str], str]
    decode: Callable[[str], str]


def table_codec(t: EncodeTable) -> TokenCodec:
    return TokenCodec(lambda s: encode(s, t), lambda s: decode(s, t))


def codec_for(g: Grammar, token: str, hooks: Optional[Mapping] = None) -> Optional[TokenCodec]:
    """Resolve the codec for ``g.token``: a registered hook wins over the table."""
    if hooks:
        hook = hooks.get((g.name, token))
        if hook is not None:
            return hook
    table = g.table(token)
    return None if table is None else table_codec(table)
