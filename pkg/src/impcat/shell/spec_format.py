"""Plain-text declaration format for sets, functions, systems, maps, kernels,
regulation problems and reasoners.

Example::

    # comments run to end of line
    set X = {x0, x1, x2, x3}
    set M = {m0, m1}
    system Clock4 { states X  inputs 1  update { x0 -> x1  x1 -> x2  x2 -> x3  x3 -> x0 } }
    system Clock2 { states M  inputs 1  update { m0 -> m1  m1 -> m0 } }
    map mu : Clock4 -> Clock2 { states { x0 -> m0  x1 -> m1  x2 -> m0  x3 -> m1 } }

Products are written ``A * B`` (or ``A × B``), tuples ``(a, b)``; nested
tuples are flattened. ``_|_`` is accepted for ``⊥``. Kernels::

    kernel f : A ~> B rel { a -> {x, y}  b -> {y} }
    kernel flip : B ~> B stoch { 0 -> {0: 3/4, 1: 1/4}  1 -> {0: 1/4, 1: 3/4} }
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import SpecError
from ..finsys import UNIT, UNIT_ELEMENT, FinSet, System, SystemMap, TotalFn, join, make_map, make_system, product
from ..impkit import RegulationProblem
from ..interp import Reasoner
from ..kernelcat import Kernel, RelKernel, StochKernel

ALIASES = {"_|_": "⊥"}
ASCII = {v: k for k, v in ALIASES.items()}


class ParseError(SpecError):
    """Carries a classification (lexical, syntax, reference, validation) and a position."""

    def __init__(self, kind: str, message: str, line: int = 0, col: int = 0):
        self.kind, self.line, self.col = kind, line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{kind} error: {message}")


TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<frac>-?\d+/\d+)
  | (?P<arrow>->) | (?P<squig>~>)
  | (?P<atom>_\|_|⊥|[A-Za-z0-9_][A-Za-z0-9_.']*)
  | (?P<punct>[{}()\[\],:=;*×])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("lexical", f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            t = m.group()
            if kind == "atom":
                t = ALIASES.get(t, t)
            if kind == "punct" and t == "×":
                t = "*"
            toks.append(Token(kind, t, line, col))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


def literal_set(label: str, elems: list) -> FinSet:
    """A braced set; tuple elements get one synthetic factor per position so they still split."""
    lengths = {len(e) if isinstance(e, tuple) else 1 for e in elems}
    if len(lengths) > 1:
        raise SpecError(f"set {label}: elements have mixed tuple lengths")
    n = lengths.pop() if lengths else 1
    if n == 1:
        return FinSet(label, elems)
    factors = [FinSet(f"{label}.{k}", dict.fromkeys(e[k] for e in elems)) for k in range(n)]
    return FinSet(label, elems, factors)


KINDS = ("sets", "functions", "systems", "maps", "kernels", "problems", "reasoners")


@dataclass
class SpecDocument:
    sets: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    systems: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    problems: dict = field(default_factory=dict)
    reasoners: dict = field(default_factory=dict)

    def get(self, kind: str, name: str):
        table = getattr(self, kind)
        if name not in table:
            have = ", ".join(table) or "none"
            raise ParseError("reference", f"no {kind[:-1]} named {name!r} (have: {have})")
        return table[name]

    def function_like(self, name: str) -> TotalFn:
        """A declared function, or the state part of a declared map."""
        if name in self.functions:
            return self.functions[name]
        if name in self.maps:
            return self.maps[name].on_states
        raise ParseError("reference", f"no function or map named {name!r}")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.doc = SpecDocument()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, kind: str = "syntax", tok: Token | None = None):
        t = tok or self.tok
        return ParseError(kind, msg, t.line, t.col)

    def expect(self, text: str | None = None, kind: str | None = None) -> Token:
        t = self.tok
        if (text is not None and (t.text != text or t.kind == "eof")) or (kind is not None and t.kind != kind):
            want = repr(text) if text else kind
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise self.error(f"expected {want}, got {got}")
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("punct", "atom", "arrow", "squig"):
            self.i += 1
            return True
        return False

    def name(self) -> Token:
        return self.expect(kind="atom")

    def declare(self, kind: str, tok: Token, value):
        table = getattr(self.doc, kind)
        if tok.text in table:
            raise self.error(f"duplicate {kind[:-1]} {tok.text!r}", "validation", tok)
        table[tok.text] = value

    def validated(self, tok: Token, build):
        try:
            return build()
        except ParseError:
            raise
        except SpecError as exc:
            raise self.error(str(exc), "validation", tok) from None

    # grammar
    def document(self) -> SpecDocument:
        while self.tok.kind != "eof":
            head = self.name()
            handler = getattr(self, f"decl_{head.text}", None)
            if handler is None:
                raise self.error(
                    f"expected a declaration (set, fn, system, map, kernel, problem, reasoner), got {head.text!r}",
                    tok=head)
            handler()
        return self.doc

    def set_expr(self, label: str | None = None) -> FinSet:
        start = self.tok
        factors = [self.set_atom(label)]
        while self.accept("*"):
            factors.append(self.set_atom())
        if len(factors) == 1:
            return factors[0]
        return self.validated(start, lambda: product(*factors, label=label or "*".join(f.label for f in factors)))

    def set_atom(self, label: str | None = None) -> FinSet:
        t = self.tok
        if self.accept("{"):
            elems = []
            while not self.accept("}"):
                elems.append(self.element())
                if not self.accept(","):
                    self.expect("}")
                    break
            return self.validated(t, lambda: literal_set(label or "{" + ",".join(map(str, elems)) + "}", elems))
        if self.accept("("):
            s = self.set_expr()
            self.expect(")")
            return s
        n = self.name()
        if n.text == "1":
            return UNIT
        if n.text not in self.doc.sets:
            raise self.error(f"unknown set {n.text!r}", "reference", n)
        return self.doc.sets[n.text]

    def element(self):
        if self.accept("("):
            comps = [self.element()]
            while self.accept(","):
                comps.append(self.element())
            self.expect(")")
            return join(comps)
        if self.accept("*"):
            return UNIT_ELEMENT
        return self.name().text

    def table(self, value=None) -> list[tuple[Token, object, object]]:
        """``{ k -> v ... }`` pairs with the token of each key."""
        value = value or self.element
        self.expect("{")
        rows = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                raise self.error("expected '}', got end of input")
            t = self.tok
            k = self.element()
            self.expect("->")
            rows.append((t, k, value()))
            self.accept(",")
        return rows

    def fn_table(self, tok: Token, dom: FinSet, cod: FinSet, name: str) -> TotalFn:
        rows = self.table()
        table = {}
        for t, k, v in rows:
            if k not in dom:
                raise self.error(f"{name}: {k!r} is not in {dom.label}", "validation", t)
            if k in table:
                raise self.error(f"{name}: duplicate entry for {dom.fmt(k)}", "validation", t)
            table[k] = v
        return self.validated(tok, lambda: TotalFn(dom, cod, table, name))

    def decl_set(self):
        n = self.name()
        self.expect("=")
        s = self.set_expr(n.text)
        s = FinSet(n.text, s.elements, s.factors) if not s.is_unit else s
        self.declare("sets", n, s)

    def decl_fn(self):
        n = self.name()
        self.expect(":")
        dom = self.set_expr()
        self.expect("->")
        cod = self.set_expr()
        self.declare("functions", n, self.fn_table(n, dom, cod, n.text))

    def decl_system(self):
        n = self.name()
        self.expect("{")
        self.keyword("states")
        X = self.set_expr()
        self.keyword("inputs")
        I = self.set_expr()
        self.keyword("update")
        try:
            dom = product(X, I)
        except SpecError as exc:
            raise self.error(str(exc), "validation", n) from None
        upd = self.fn_table(n, dom, X, f"upd_{n.text}")
        self.expect("}")
        self.declare("systems", n, self.validated(n, lambda: make_system(X, I, upd, n.text)))

    def keyword(self, word: str):
        t = self.tok
        if t.text != word or t.kind != "atom":
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise self.error(f"expected {word!r}, got {got}")
        self.i += 1

    def decl_map(self):
        n = self.name()
        self.expect(":")
        src = self.sys_ref()
        self.expect("->")
        tgt = self.sys_ref()
        self.expect("{")
        self.keyword("states")
        if self.tok.text == "{":
            on_states = self.fn_table(n, src.states, tgt.states, f"{n.text}_s")
        else:
            r = self.name()
            try:
                on_states = self.doc.function_like(r.text)
            except ParseError as exc:
                raise self.error(str(exc).split("error: ", 1)[-1], "reference", r) from None
        on_inputs = None
        if self.tok.text == "inputs":
            self.keyword("inputs")
            on_inputs = self.fn_table(n, src.interface, tgt.inputs, f"{n.text}_i")
        self.expect("}")
        self.declare("maps", n, self.validated(n, lambda: make_map(src, tgt, on_states, on_inputs, n.text)))

    def sys_ref(self) -> System:
        r = self.name()
        if r.text not in self.doc.systems:
            raise self.error(f"unknown system {r.text!r}", "reference", r)
        return self.doc.systems[r.text]

    def decl_kernel(self):
        n = self.name()
        self.expect(":")
        dom = self.set_expr()
        self.expect("~>")
        cod = self.set_expr()
        flavor = self.name()
        if flavor.text not in ("rel", "stoch"):
            raise self.error(f"expected 'rel' or 'stoch', got {flavor.text!r}", tok=flavor)
        if flavor.text == "rel":
            rows = self.table(self.element_set)
            cls = RelKernel
        else:
            rows = self.table(self.weights)
            cls = StochKernel
        data = {}
        for t, k, v in rows:
            if k not in dom:
                raise self.error(f"{n.text}: {k!r} is not in {dom.label}", "validation", t)
            data[k] = v
        self.declare("kernels", n, self.validated(n, lambda: cls(dom, cod, data, n.text)))

    def element_set(self) -> list:
        self.expect("{")
        out = []
        while not self.accept("}"):
            out.append(self.element())
            if not self.accept(","):
                self.expect("}")
                break
        return out

    def weights(self) -> dict:
        self.expect("{")
        out = {}
        while not self.accept("}"):
            k = self.element()
            self.expect(":")
            t = self.tok
            if t.kind == "frac" or (t.kind == "atom" and t.text.isdigit()):
                self.i += 1
                out[k] = Fraction(t.text)
            else:
                raise self.error(f"expected a rational weight, got {t.text!r}")
            if not self.accept(","):
                self.expect("}")
                break
        return out

    def decl_problem(self):
        n = self.name()
        self.expect("{")
        self.keyword("env")
        env = self.sys_ref()
        self.keyword("plant")
        plant = self.sys_ref()
        self.keyword("controller")
        ctrl = self.sys_ref()
        self.keyword("targets")
        targets = self.element_set()
        attractor = None
        if self.tok.text == "attractor":
            self.keyword("attractor")
            attractor = frozenset(self.element_set())
        self.expect("}")
        self.declare("problems", n, self.validated(
            n, lambda: RegulationProblem(env, plant, ctrl, frozenset(targets), attractor, n.text)))

    def decl_reasoner(self):
        n = self.name()
        self.expect("{")
        self.keyword("params")
        T = self.set_expr()
        self.keyword("observations")
        Y = self.set_expr()
        self.keyword("hidden")
        X = self.set_expr()
        self.keyword("update")
        c = self.ref("functions")
        self.keyword("interpretation")
        psi = self.ref("kernels")
        self.keyword("model")
        kappa = self.ref("kernels")
        self.expect("}")
        self.declare("reasoners", n, self.validated(n, lambda: Reasoner(T, Y, X, c, psi, kappa, n.text)))

    def ref(self, kind: str):
        r = self.name()
        table = getattr(self.doc, kind)
        if r.text not in table:
            raise self.error(f"unknown {kind[:-1]} {r.text!r}", "reference", r)
        return table[r.text]


def parse_spec(text: str) -> SpecDocument:
    return _Parser(text).document()


# --- printing -------------------------------------------------------------------------


def _atom(a, ascii: bool) -> str:
    return ASCII.get(a, a) if ascii else a


def format_element(s: FinSet, e, ascii: bool = True) -> str:
    if s.is_unit:
        return "*"
    if s.factors:
        comps = s.split(e)
        return "(" + ", ".join(format_element(f, c, ascii) for f, c in zip(s.factors, comps)) + ")"
    return _atom(e, ascii)


class _Printer:
    def __init__(self, doc: SpecDocument, ascii: bool):
        self.doc, self.ascii = doc, ascii
        self.lines: list[str] = []

    def set_ref(self, s: FinSet) -> str:
        if s.is_unit:
            return "1"
        named = self.doc.sets.get(s.label)
        if named is not None and named == s and named.factors == s.factors:
            return s.label
        for name, t in self.doc.sets.items():
            if t == s and t.factors == s.factors:
                return name
        if s.factors and len(s) == _product_size(s.factors):
            return " * ".join(self.set_ref(f) for f in s.factors)
        declared = list(self.doc.sets.items())
        for a, sa in declared:
            for b, sb in declared:
                if len(sa) * len(sb) == len(s) and sa.arity + sb.arity == s.arity and product(sa, sb) == s:
                    return f"{a} * {b}"
        return "{" + ", ".join(format_element(s, e, self.ascii) for e in s) + "}"

    def el(self, s: FinSet, e) -> str:
        return format_element(s, e, self.ascii)

    def table(self, f: TotalFn, indent: str) -> list[str]:
        return [f"{indent}{self.el(f.dom, x)} -> {self.el(f.cod, f.table[x])}" for x in f.dom]

    def render(self) -> str:
        d = self.doc
        for name, s in d.sets.items():
            if s.factors and len(s) == _product_size(s.factors) and all(
                    any(t == f for t in list(d.sets.values())[:list(d.sets).index(name)]) for f in s.factors):
                body = " * ".join(self.set_ref(f) for f in s.factors)
            else:
                body = "{" + ", ".join(self.el(s, e) for e in s) + "}"
            self.lines.append(f"set {name} = {body}")
        for name, f in d.functions.items():
            self.lines.append(f"fn {name} : {self.set_ref(f.dom)} -> {self.set_ref(f.cod)} {{")
            self.lines += self.table(f, "  ")
            self.lines.append("}")
        for name, s in d.systems.items():
            self.lines.append(f"system {name} {{")
            self.lines.append(f"  states {self.set_ref(s.states)}")
            self.lines.append(f"  inputs {self.set_ref(s.inputs)}")
            self.lines.append("  update {")
            self.lines += self.table(s.update, "    ")
            self.lines += ["  }", "}"]
        for name, m in d.maps.items():
            src = _name_of(d.systems, m.source)
            tgt = _name_of(d.systems, m.target)
            self.lines.append(f"map {name} : {src} -> {tgt} {{")
            self.lines.append("  states {")
            self.lines += self.table(m.on_states, "    ")
            self.lines.append("  }")
            self.lines.append("  inputs {")
            self.lines += self.table(m.on_inputs, "    ")
            self.lines += ["  }", "}"]
        for name, k in d.kernels.items():
            self.lines.append(f"kernel {name} : {self.set_ref(k.dom)} ~> {self.set_ref(k.cod)} {k.flavor} {{")
            for x in k.dom:
                if k.flavor == "rel":
                    ys = [y for y in k.cod if y in k.rows[x]]
                    body = ", ".join(self.el(k.cod, y) for y in ys)
                else:
                    body = ", ".join(f"{self.el(k.cod, y)}: {k.rows[x][y]}" for y in k.cod if y in k.rows[x])
                self.lines.append(f"  {self.el(k.dom, x)} -> {{{body}}}")
            self.lines.append("}")
        for name, p in d.problems.items():
            ep = product(p.env.states, p.plant.states)
            s = product(p.env.states, p.plant.states, p.controller.states)
            self.lines.append(f"problem {name} {{")
            self.lines.append(f"  env {_name_of(d.systems, p.env)}")
            self.lines.append(f"  plant {_name_of(d.systems, p.plant)}")
            self.lines.append(f"  controller {_name_of(d.systems, p.controller)}")
            targets = [t for t in ep if t in p.targets]
            self.lines.append("  targets {" + ", ".join(self.el(ep, t) for t in targets) + "}")
            if p.attractor is not None:
                att = [x for x in s if x in p.attractor]
                self.lines.append("  attractor {" + ", ".join(self.el(s, x) for x in att) + "}")
            self.lines.append("}")
        for name, r in d.reasoners.items():
            self.lines += [
                f"reasoner {name} {{",
                f"  params {self.set_ref(r.params)}",
                f"  observations {self.set_ref(r.observations)}",
                f"  hidden {self.set_ref(r.hidden)}",
                f"  update {_name_of(d.functions, r.update)}",
                f"  interpretation {_name_of(d.kernels, r.interpretation)}",
                f"  model {_name_of(d.kernels, r.model)}",
                "}",
            ]
        return "\n".join(self.lines) + "\n"


def _product_size(factors) -> int:
    n = 1
    for f in factors:
        n *= len(f)
    return n


def _name_of(table: dict, obj) -> str:
    for k, v in table.items():
        if v is obj:
            return k
    for k, v in table.items():
        if v == obj:
            return k
    raise SpecError(f"object {obj!r} is not declared in the document")


def print_spec(doc: SpecDocument, ascii: bool = True) -> str:
    return _Printer(doc, ascii).render()


def signature(doc: SpecDocument) -> dict:
    """Plain-data view of a document for structural comparison."""

    def fs(s: FinSet):
        return sorted(map(repr, s.elements))

    def fn(f: TotalFn):
        return fs(f.dom), fs(f.cod), sorted((repr(k), repr(v)) for k, v in f.table.items())

    def sysd(s: System):
        return fs(s.states), fs(s.inputs), fn(s.update)

    def kern(k: Kernel):
        rows = sorted((repr(x), sorted((repr(y), str(w)) for y, w in (
            k.rows[x].items() if isinstance(k.rows[x], dict) else ((y, 1) for y in k.rows[x])))) for x in k.dom)
        return k.flavor, fs(k.dom), fs(k.cod), rows

    return {
        "sets": {n: fs(s) for n, s in doc.sets.items()},
        "functions": {n: fn(f) for n, f in doc.functions.items()},
        "systems": {n: sysd(s) for n, s in doc.systems.items()},
        "maps": {n: (sysd(m.source), sysd(m.target), fn(m.on_states), fn(m.on_inputs)) for n, m in doc.maps.items()},
        "kernels": {n: kern(k) for n, k in doc.kernels.items()},
        "problems": {n: (sysd(p.env), sysd(p.plant), sysd(p.controller), sorted(map(repr, p.targets)),
                         None if p.attractor is None else sorted(map(repr, p.attractor)))
                     for n, p in doc.problems.items()},
        "reasoners": {n: (fs(r.params), fs(r.observations), fs(r.hidden), fn(r.update),
                          kern(r.interpretation), kern(r.model)) for n, r in doc.reasoners.items()},
    }
