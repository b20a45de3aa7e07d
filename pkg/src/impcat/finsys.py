"""Finite sets, total functions, systems and maps of systems.

Elements of base sets are plain strings. Products are *strict*: an element
of ``A * B`` is the flat tuple of the atomic components of an ``A`` element
followed by those of a ``B`` element, and the unit set ``1 = {*}`` is
absorbed (``1 * A`` is ``A``). This keeps associators and unitors out of
the way when comparing kernels, at the price of every set carrying its
arity so that flat tuples can be split again.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import PreconditionError, SpecError

Element = Hashable

UNIT_ELEMENT = "*"

#: Largest set (in elements) that `product` will build.
MAX_ELEMENTS = 4096


def parts(e: Element) -> tuple:
    if e == UNIT_ELEMENT:
        return ()
    if isinstance(e, tuple):
        return e
    return (e,)


def join(components: Sequence) -> Element:
    flat: list = []
    for c in components:
        flat.extend(parts(c))
    if not flat:
        return UNIT_ELEMENT
    if len(flat) == 1:
        return flat[0]
    return tuple(flat)


class FinSet:
    """An ordered finite set of distinct elements.

    ``factors`` records the component sets when the elements are flat
    tuples drawn from a product; it drives splitting and pretty-printing.
    Equality ignores the label and the order of elements.
    """

    __slots__ = ("label", "elements", "factors", "_index")

    def __init__(self, label: str, elements: Iterable[Element], factors: Sequence["FinSet"] = ()):
        elements = tuple(elements)
        index = {}
        for k, e in enumerate(elements):
            if e in index:
                raise SpecError(f"set {label}: duplicate element {e!r}")
            index[e] = k
        factors = tuple(f for f in factors if f.arity > 0)
        if len(factors) == 1:
            factors = factors[0].factors
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "_index", index)
        if elements == (UNIT_ELEMENT,):
            return
        if UNIT_ELEMENT in index:
            raise SpecError(f"set {label}: '*' is reserved for the unit set")
        ar = self.arity
        for e in elements:
            if ar == 1 and isinstance(e, tuple):
                raise SpecError(f"set {label}: base elements must be atoms, got {e!r}")
            if ar > 1 and (not isinstance(e, tuple) or len(e) != ar):
                raise SpecError(f"set {label}: element {e!r} does not have arity {ar}")

    def __setattr__(self, name, value):
        raise AttributeError("FinSet is immutable")

    @property
    def arity(self) -> int:
        if self.elements == (UNIT_ELEMENT,):
            return 0
        if self.factors:
            return sum(f.arity for f in self.factors)
        return 1

    @property
    def is_unit(self) -> bool:
        return self.elements == (UNIT_ELEMENT,)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __contains__(self, e) -> bool:
        try:
            return e in self._index
        except TypeError:
            return False

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinSet):
            return NotImplemented
        return self.arity == other.arity and self._index.keys() == other._index.keys()

    def __hash__(self) -> int:
        return hash(frozenset(self.elements))

    def __repr__(self) -> str:
        return f"FinSet({self.label!r}, {len(self)} elements)"

    def index(self, e: Element) -> int:
        return self._index[e]

    def require(self, e: Element, what: str = "element") -> Element:
        if e not in self:
            raise SpecError(f"unknown {what} {self.fmt(e)} (not in {self.label})")
        return e

    def subset(self, elements: Iterable[Element], label: str | None = None) -> "FinSet":
        """Sub-set in this set's order; factors are kept so elements still split."""
        wanted = set(elements)
        for e in wanted:
            self.require(e)
        kept = [e for e in self.elements if e in wanted]
        return FinSet(label or f"{self.label}'", kept, self.factors)

    def split(self, e: Element) -> tuple:
        """Split an element of a product into one element per factor."""
        if not self.factors:
            return (e,)
        ps = parts(e)
        out, k = [], 0
        for f in self.factors:
            out.append(join(ps[k:k + f.arity]))
            k += f.arity
        return tuple(out)

    def fmt(self, e: Element) -> str:
        if not self.factors or e not in self:
            if isinstance(e, tuple):
                return "(" + ",".join(str(p) for p in e) + ")"
            return str(e)
        return "(" + ",".join(f.fmt(c) for f, c in zip(self.factors, self.split(e))) + ")"


UNIT = FinSet("1", (UNIT_ELEMENT,))


def product(*sets: FinSet, label: str | None = None) -> FinSet:
    sets = tuple(s for s in sets if not s.is_unit)
    if not sets:
        return UNIT
    if len(sets) == 1:
        return sets[0]
    size = 1
    for s in sets:
        size *= len(s)
    if size > MAX_ELEMENTS:
        raise SpecError(f"product of {'*'.join(s.label for s in sets)} has {size} elements, cap is {MAX_ELEMENTS}")
    elements = [join(combo) for combo in itertools.product(*(s.elements for s in sets))]
    factors: list[FinSet] = []
    for s in sets:
        factors.extend(s.factors if s.factors else (s,))
    return FinSet(label or "*".join(s.label for s in sets), elements, factors)


def split_pair(left: FinSet, e: Element) -> tuple[Element, Element]:
    """Split an element of ``left * right`` into its two halves."""
    ps = parts(e)
    k = left.arity
    return join(ps[:k]), join(ps[k:])


class TotalFn:
    """A total function between finite sets, stored as a lookup table."""

    __slots__ = ("dom", "cod", "table", "name")

    def __init__(self, dom: FinSet, cod: FinSet, table: Mapping[Element, Element], name: str = "f"):
        missing = [x for x in dom if x not in table]
        if missing:
            raise SpecError(f"{name}: table not total, missing {', '.join(dom.fmt(x) for x in missing)}")
        extra = [x for x in table if x not in dom]
        if extra:
            raise SpecError(f"{name}: entries outside domain {dom.label}: {extra!r}")
        for x in dom:
            if table[x] not in cod:
                raise SpecError(f"{name}: image {cod.fmt(table[x])} of {dom.fmt(x)} lies outside {cod.label}")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "table", {x: table[x] for x in dom})
        object.__setattr__(self, "name", name)

    def __setattr__(self, name, value):
        raise AttributeError("TotalFn is immutable")

    @classmethod
    def from_callable(cls, dom: FinSet, cod: FinSet, fn: Callable[[Element], Element], name: str = "f") -> "TotalFn":
        return cls(dom, cod, {x: fn(x) for x in dom}, name)

    @classmethod
    def identity(cls, s: FinSet) -> "TotalFn":
        return cls(s, s, {x: x for x in s}, f"id_{s.label}")

    @classmethod
    def constant(cls, dom: FinSet, cod: FinSet, value: Element, name: str = "const") -> "TotalFn":
        return cls(dom, cod, {x: value for x in dom}, name)

    def __call__(self, x: Element) -> Element:
        try:
            return self.table[x]
        except (KeyError, TypeError):
            raise SpecError(f"{self.name}: {x!r} not in domain {self.dom.label}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, TotalFn):
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and self.table == other.table

    def __hash__(self):
        return hash(tuple(sorted(map(repr, self.table.items()))))

    def __repr__(self) -> str:
        return f"TotalFn({self.name}: {self.dom.label} -> {self.cod.label})"

    def then(self, g: "TotalFn") -> "TotalFn":
        if self.cod != g.dom:
            raise SpecError(f"cannot compose {self.name} : ->{self.cod.label} with {g.name} : {g.dom.label}->")
        return TotalFn(self.dom, g.cod, {x: g.table[self.table[x]] for x in self.dom}, f"{self.name};{g.name}")

    def image(self) -> set:
        return set(self.table.values())

    def is_surjective(self) -> bool:
        return self.image() == set(self.cod.elements)

    def is_injective(self) -> bool:
        return len(self.image()) == len(self.dom)

    def fibre(self, b: Element) -> list:
        return [a for a in self.dom if self.table[a] == b]

    def fibres(self) -> dict:
        out: dict = {b: [] for b in self.cod}
        for a in self.dom:
            out[self.table[a]].append(a)
        return out


@dataclass(frozen=True)
class System:
    """A fully observable system: states X, inputs I and a total X*I -> X update."""

    states: FinSet
    inputs: FinSet
    update: TotalFn
    name: str = "sys"

    def __post_init__(self):
        if self.update.dom != product(self.states, self.inputs):
            raise SpecError(f"{self.name}: update domain must be {self.states.label} * {self.inputs.label}")
        if self.update.cod != self.states:
            raise SpecError(f"{self.name}: update codomain must be {self.states.label}")

    @property
    def autonomous(self) -> bool:
        return self.inputs.is_unit

    @property
    def interface(self) -> FinSet:
        return product(self.states, self.inputs)

    def step(self, x: Element, i: Element = UNIT_ELEMENT) -> Element:
        self.states.require(x, "state")
        self.inputs.require(i, "input")
        return self.update.table[join((x, i))]

    def restrict(self, subset: Iterable[Element], name: str | None = None) -> "System":
        """The subsystem on a forward-invariant subset."""
        sub = self.states.subset(subset, f"{self.states.label}*")
        escapes = escaping_pairs(self, sub)
        if escapes:
            x, i = escapes[0]
            raise PreconditionError(
                f"{self.name}: subset is not forward-invariant, "
                f"({self.states.fmt(x)},{self.inputs.fmt(i)}) leaves it")
        dom = product(sub, self.inputs)
        table = {k: self.update.table[k] for k in dom}
        return System(sub, self.inputs, TotalFn(dom, sub, table, f"upd_{name or self.name}*"), name or f"{self.name}*")


def make_system(states: FinSet, inputs: FinSet, update, name: str = "sys") -> System:
    """Build a validated system; ``update`` may be a TotalFn or a plain mapping."""
    if not isinstance(update, TotalFn):
        update = TotalFn(product(states, inputs), states, _normalise_keys(update), f"upd_{name}")
    try:
        return System(states, inputs, update, name)
    except SpecError:
        raise
    except Exception as exc:  # pragma: no cover
        raise SpecError(str(exc)) from exc


def _normalise_keys(table: Mapping) -> dict:
    return {join(k) if isinstance(k, tuple) else k: v for k, v in table.items()}


def autonomous_system(states: FinSet, nxt: Mapping[Element, Element] | Callable, name: str = "sys") -> System:
    if callable(nxt):
        nxt = {x: nxt(x) for x in states}
    try:
        return make_system(states, UNIT, dict(nxt), name)
    except SpecError as exc:
        if "not total" in str(exc):
            raise SpecError(f"{name}: update not total ({exc})") from exc
        raise


def run(sys: System, start: Element, word: Sequence[Element]) -> list:
    sys.states.require(start, "state")
    traj = [start]
    x = start
    for i in word:
        x = sys.step(x, i)
        traj.append(x)
    return traj


# --- maps of systems -------------------------------------------------------


@dataclass(frozen=True)
class SystemMap:
    source: System
    target: System
    on_states: TotalFn
    on_inputs: TotalFn
    name: str = "map"

    def __post_init__(self):
        if self.on_states.dom != self.source.states or self.on_states.cod != self.target.states:
            raise SpecError(f"{self.name}: map on states must be {self.source.states.label} -> {self.target.states.label}")
        if self.on_inputs.dom != self.source.interface or self.on_inputs.cod != self.target.inputs:
            raise SpecError(
                f"{self.name}: map on inputs must be {self.source.states.label}*{self.source.inputs.label}"
                f" -> {self.target.inputs.label}")


def make_map(source: System, target: System, on_states, on_inputs=None, name: str = "map") -> SystemMap:
    """Convenience constructor.

    ``on_inputs`` defaults to the unique map when the target is autonomous
    and to the projection onto inputs when both systems share an input set.
    """
    if not isinstance(on_states, TotalFn):
        on_states = TotalFn(source.states, target.states, dict(on_states), f"{name}_s")
    dom = source.interface
    if on_inputs is None:
        if target.autonomous:
            on_inputs = TotalFn.constant(dom, UNIT, UNIT_ELEMENT, f"{name}_i")
        elif source.inputs == target.inputs:
            on_inputs = TotalFn.from_callable(dom, target.inputs, lambda k: split_pair(source.states, k)[1], f"{name}_i")
        else:
            raise SpecError(f"{name}: map on inputs required when input sets differ")
    elif not isinstance(on_inputs, TotalFn):
        on_inputs = TotalFn(dom, target.inputs, _normalise_keys(on_inputs), f"{name}_i")
    return SystemMap(source, target, on_states, on_inputs, name)


def identity_map(sys: System) -> SystemMap:
    return make_map(sys, sys, TotalFn.identity(sys.states), name=f"id_{sys.name}")


@dataclass
class MapCheck:
    valid: bool
    counterexamples: list = field(default_factory=list)

    def __bool__(self):
        return self.valid


def check_system_map(f: SystemMap) -> MapCheck:
    """Check the commuting square at every (state, input) pair.

    Each counterexample is ``(x, i, f_s(upd(x,i)), upd'(f_s(x), f_i(x,i)))``.
    """
    src, tgt = f.source, f.target
    bad = []
    for x in src.states:
        for i in src.inputs:
            k = join((x, i))
            lhs = f.on_states.table[src.update.table[k]]
            rhs = tgt.update.table[join((f.on_states.table[x], f.on_inputs.table[k]))]
            if lhs != rhs:
                bad.append((x, i, lhs, rhs))
    return MapCheck(not bad, bad)


def compose_maps(f: SystemMap, g: SystemMap) -> SystemMap:
    if f.target.states != g.source.states or f.target.inputs != g.source.inputs:
        raise SpecError(f"cannot compose {f.name} with {g.name}: interface mismatch")
    fs, fi, gs, gi = f.on_states.table, f.on_inputs.table, g.on_states.table, g.on_inputs.table
    on_states = TotalFn(f.source.states, g.target.states, {x: gs[fs[x]] for x in f.source.states}, f"{f.name};{g.name}_s")
    dom = f.source.interface
    on_inputs = {}
    for k in dom:
        x, _ = split_pair(f.source.states, k)
        on_inputs[k] = gi[join((fs[x], fi[k]))]
    return SystemMap(f.source, g.target, on_states, TotalFn(dom, g.target.inputs, on_inputs, f"{f.name};{g.name}_i"),
                     f"{f.name};{g.name}")


def maps_equal(f: SystemMap, g: SystemMap) -> bool:
    return f.on_states.table == g.on_states.table and f.on_inputs.table == g.on_inputs.table


# --- subsystems and attraction ---------------------------------------------


def escaping_pairs(sys: System, subset) -> list:
    inside = set(subset)
    return [(x, i) for x in sys.states if x in inside for i in sys.inputs
            if sys.update.table[join((x, i))] not in inside]


@dataclass
class InvarianceReport:
    invariant: bool
    escaping: list = field(default_factory=list)

    def __bool__(self):
        return self.invariant


def is_forward_invariant(sys: System, subset) -> InvarianceReport:
    subset = set(subset)
    for x in subset:
        sys.states.require(x, "state")
    esc = escaping_pairs(sys, subset)
    return InvarianceReport(not esc, esc)


@dataclass
class AttractionReport:
    attracting: bool
    horizon: int | None
    stranded: list = field(default_factory=list)
    layers: list = field(default_factory=list)

    def __bool__(self):
        return self.attracting


def guaranteed_reach(sys: System, subset) -> list[set]:
    """Backward layers G_0 = subset, G_{k+1} = G_k plus states forced into G_k."""
    layers = [set(subset)]
    while True:
        cur = layers[-1]
        nxt = set(cur)
        for x in sys.states:
            if x not in cur and all(sys.update.table[join((x, i))] in cur for i in sys.inputs):
                nxt.add(x)
        if nxt == cur:
            return layers
        layers.append(nxt)


def is_attracting(sys: System, subset) -> AttractionReport:
    subset = set(subset)
    if not subset:
        raise PreconditionError("empty subset cannot be an attracting subsystem of a non-empty system")
    inv = is_forward_invariant(sys, subset)
    if not inv:
        x, i = inv.escaping[0]
        raise PreconditionError(
            f"subset is not forward-invariant: ({sys.states.fmt(x)},{sys.inputs.fmt(i)}) leaves it")
    layers = guaranteed_reach(sys, subset)
    final = layers[-1]
    everything = set(sys.states.elements)
    if final == everything:
        return AttractionReport(True, len(layers) - 1, [], layers)
    return AttractionReport(False, None, [x for x in sys.states if x not in final], layers)


@dataclass(frozen=True)
class SubsystemWitness:
    parent: System
    subset: frozenset
    horizon: int | None = None

    def __post_init__(self):
        inv = is_forward_invariant(self.parent, self.subset)
        if not inv:
            x, i = inv.escaping[0]
            raise PreconditionError(f"({self.parent.states.fmt(x)},{i}) escapes the proposed subsystem")

    def system(self, name: str | None = None) -> System:
        return self.parent.restrict(self.subset, name or f"{self.parent.name}*")

    def ordered(self) -> list:
        return [x for x in self.parent.states if x in self.subset]


# --- models ------------------------------------------------------------------


@dataclass
class ModelReport:
    surjective_on_states: bool
    fibrewise_surjective_on_inputs: bool
    square_commutes: bool
    counterexamples: list = field(default_factory=list)

    @property
    def is_model(self) -> bool:
        return self.surjective_on_states and self.fibrewise_surjective_on_inputs and self.square_commutes

    @property
    def verdict(self) -> str:
        return "model" if self.is_model else "not a model"

    def __bool__(self):
        return self.is_model


def check_model(mu: SystemMap) -> ModelReport:
    """Counterexamples are tagged tuples: ``("unhit_state", m)``,
    ``("unhit_input", x, j)`` and ``("square", x, i, lhs, rhs)``."""
    cex: list = []
    hit = mu.on_states.image()
    unhit = [m for m in mu.target.states if m not in hit]
    cex += [("unhit_state", m) for m in unhit]
    fib_ok = True
    for x in mu.source.states:
        seen = {mu.on_inputs.table[join((x, i))] for i in mu.source.inputs}
        for j in mu.target.inputs:
            if j not in seen:
                fib_ok = False
                cex.append(("unhit_input", x, j))
    sq = check_system_map(mu)
    cex += [("square",) + c for c in sq.counterexamples]
    return ModelReport(not unhit, fib_ok, sq.valid, cex)


def check_trivial_model(mu: SystemMap, factor_states: TotalFn, factor_inputs: TotalFn, fsys: System) -> bool:
    """Does the referent split as referrer x F with uncoupled dynamics?

    The input map of ``mu`` must not depend on the state for an input
    factorisation to make sense; that, and joint bijectivity of
    ``(mu_s, factor_states)`` and ``(mu_i, factor_inputs)``, are preconditions.
    """
    X, I = mu.source.states, mu.source.inputs
    M, J = mu.target.states, mu.target.inputs
    if factor_states.dom != X or factor_states.cod != fsys.states:
        raise SpecError("state factor must be X -> F")
    if factor_inputs.dom != I or factor_inputs.cod != fsys.inputs:
        raise SpecError("input factor must be I -> H")
    pair_s = {x: (mu.on_states.table[x], factor_states.table[x]) for x in X}
    if len(set(pair_s.values())) != len(X) or len(X) != len(M) * len(fsys.states):
        raise PreconditionError("factorisation not bijective on states")
    input_proj = {}
    for i in I:
        js = {mu.on_inputs.table[join((x, i))] for x in X}
        if len(js) != 1:
            raise PreconditionError(f"map on inputs depends on the state at input {I.fmt(i)}")
        input_proj[i] = js.pop()
    pair_i = {i: (input_proj[i], factor_inputs.table[i]) for i in I}
    if len(set(pair_i.values())) != len(I) or len(I) != len(J) * len(fsys.inputs):
        raise PreconditionError("factorisation not bijective on inputs")
    back = {v: x for x, v in pair_s.items()}
    for x in X:
        m, f = pair_s[x]
        for i in I:
            j, h = pair_i[i]
            want = (mu.target.update.table[join((m, j))], fsys.update.table[join((f, h))])
            if pair_s[mu.source.update.table[join((x, i))]] != want:
                return False
    return bool(back)


def trivial_model_violations(mu: SystemMap, factor_states: TotalFn, factor_inputs: TotalFn, fsys: System) -> list:
    """Same check as `check_trivial_model`, returning the failing (x, i) pairs."""
    if check_trivial_model(mu, factor_states, factor_inputs, fsys):
        return []
    bad = []
    X, I = mu.source.states, mu.source.inputs
    for x in X:
        for i in I:
            nx = mu.source.update.table[join((x, i))]
            m, f = mu.on_states.table[x], factor_states.table[x]
            j = mu.on_inputs.table[join((x, i))]
            h = factor_inputs.table[i]
            if (mu.on_states.table[nx], factor_states.table[nx]) != (
                    mu.target.update.table[join((m, j))], fsys.update.table[join((f, h))]):
                bad.append((x, i))
    return bad
