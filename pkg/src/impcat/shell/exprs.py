"""Parser for kernel expressions.

    expr := term (';' term)*
    term := atom (('⊗' | '(x)') atom)*
    atom := 'id[' S ']' | 'copy[' S ']' | 'del[' S ']' | 'swap[' S ',' S ']'
          | 'fn' NAME | 'pre' NAME | NAME | '(' expr ')'

``S`` is a set name, ``1``, or a product ``A*B``. ';' binds looser than
the tensor. The literal ``(x)`` is always the tensor, so a kernel named
``x`` cannot be parenthesised on its own.
"""

from __future__ import annotations

import re

from ..kernelcat import Copy, Del, FromFn, Id, KernelExpr, Named, Par, Preimage, Seq, Swap
from .spec_format import ALIASES, ParseError

TOKEN_RE = re.compile(r"\s*(?:(?P<tensor>⊗|\(x\))|(?P<punct>[;()\[\],*])|(?P<name>_\|_|[A-Za-z0-9_.'⊥]+))")

STRUCTURAL = {"id": Id, "copy": Copy, "del": Del}


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("lexical", f"unexpected character {text[pos]!r} at column {pos + 1}", 1, pos + 1)
        kind = m.lastgroup
        val = m.group(kind)
        out.append((kind, ALIASES.get(val, val), m.start(kind) + 1))
        pos = m.end()
    out.append(("eof", "", len(text) + 1))
    return out


class _ExprParser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, what: str):
        kind, val, col = self.tok
        got = "end of input" if kind == "eof" else repr(val)
        raise ParseError("syntax", f"expected {what}, got {got} at column {col}", 1, col)

    def take(self, val: str):
        if self.tok[1] != val or self.tok[0] == "eof":
            self.fail(repr(val))
        self.i += 1

    def expr(self) -> KernelExpr:
        e = self.term()
        while self.tok[1] == ";" and self.tok[0] == "punct":
            self.i += 1
            e = Seq(e, self.term())
        return e

    def term(self) -> KernelExpr:
        e = self.atom()
        while self.tok[0] == "tensor":
            self.i += 1
            e = Par(e, self.atom())
        return e

    def set_ref(self) -> str:
        names = [self.name("a set name")]
        while self.tok[1] == "*":
            self.i += 1
            names.append(self.name("a set name"))
        return "*".join(names)

    def name(self, what: str = "a name") -> str:
        if self.tok[0] != "name":
            self.fail(what)
        v = self.tok[1]
        self.i += 1
        return v

    def atom(self) -> KernelExpr:
        kind, val, _ = self.tok
        if kind == "punct" and val == "(":
            self.i += 1
            e = self.expr()
            self.take(")")
            return e
        if kind != "name":
            self.fail("a kernel term")
        self.i += 1
        if val in STRUCTURAL and self.tok[1] == "[":
            self.i += 1
            s = self.set_ref()
            self.take("]")
            return STRUCTURAL[val](s)
        if val == "swap" and self.tok[1] == "[":
            self.i += 1
            a = self.set_ref()
            self.take(",")
            b = self.set_ref()
            self.take("]")
            return Swap(a, b)
        if val == "fn" and self.tok[0] == "name":
            return FromFn(self.name())
        if val == "pre" and self.tok[0] == "name":
            return Preimage(self.name())
        if val in ("fn", "pre"):
            self.fail("a function name")
        return Named(val)


def parse_kernel_expr(text: str) -> KernelExpr:
    p = _ExprParser(text)
    e = p.expr()
    if p.tok[0] != "eof":
        p.fail("';', '⊗' or end of input")
    return e
