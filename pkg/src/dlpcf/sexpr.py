"""Minimal S-expression reader for derivation files.

Atoms are bare words, strings are double-quoted (no escapes needed by the
derivation grammar), `;` comments run to end of line.
"""

from __future__ import annotations

from typing import Union

SExpr = Union[str, "SString", list]


class SString(str):
    """A quoted string, kept distinct from a bare atom."""


class SExprError(ValueError):
    pass


def parse_sexpr(text: str) -> SExpr:
    exprs, pos = _parse_many(text, 0)
    if len(exprs) != 1:
        raise SExprError(f"expected exactly one toplevel form, got {len(exprs)}")
    return exprs[0]


def _parse_many(text: str, pos: int, closing: bool = False) -> tuple[list, int]:
    out: list[SExpr] = []
    n = len(text)
    while True:
        while pos < n and (text[pos].isspace() or text[pos] == ";"):
            if text[pos] == ";":
                while pos < n and text[pos] != "\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            if closing:
                raise SExprError("unterminated list")
            return out, pos
        ch = text[pos]
        if ch == ")":
            if not closing:
                raise SExprError("unbalanced ')'")
            return out, pos + 1
        if ch == "(":
            inner, pos = _parse_many(text, pos + 1, closing=True)
            out.append(inner)
        elif ch == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise SExprError("unterminated string")
            out.append(SString(text[pos + 1:end]))
            pos = end + 1
        else:
            start = pos
            while pos < n and not text[pos].isspace() and text[pos] not in '();"':
                pos += 1
            out.append(text[start:pos])
