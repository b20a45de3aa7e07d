"""Possibilistic (left-total relation) and exact probabilistic Markov kernels.

Both flavours share one interface: ``f >> g`` is sequential composition
(diagrammatic order, f first), ``f @ g`` is the tensor product, and the
structure maps are classmethods (``identity``, ``copy``, ``delete``,
``swap``, ``from_fn``). Probabilities are `fractions.Fraction`; nothing
in this module touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InvariantViolation, PreconditionError, SpecError
from .finsys import UNIT, UNIT_ELEMENT, Element, FinSet, TotalFn, join, product, split_pair


class KernelTypeError(SpecError):
    pass


class Kernel:
    """Base class; subclasses store one row per domain element."""

    flavor = "?"
    __slots__ = ("dom", "cod", "rows", "name")

    def __init__(self, dom: FinSet, cod: FinSet, rows: Mapping, name: str = "k"):
        missing = [x for x in dom if x not in rows]
        if missing:
            raise SpecError(f"{name}: no row for {', '.join(dom.fmt(x) for x in missing)}")
        extra = [x for x in rows if x not in dom]
        if extra:
            raise SpecError(f"{name}: rows outside domain {dom.label}: {extra!r}")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "rows", {x: self._check_row(name, dom, cod, x, rows[x]) for x in dom})

    def __setattr__(self, name, value):
        raise AttributeError("kernels are immutable")

    def __call__(self, x: Element):
        return self.rows[x]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Kernel) or other.flavor != self.flavor:
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and self.rows == other.rows

    __hash__ = None

    def __rshift__(self, other: "Kernel") -> "Kernel":
        return self.then(other)

    def __matmul__(self, other: "Kernel") -> "Kernel":
        return self.tensor(other)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}: {self.dom.label} -> {self.cod.label})"

    def disagreements(self, other: "Kernel") -> list:
        """Domain elements where two same-typed kernels differ, with both rows."""
        if self.dom != other.dom or self.cod != other.cod:
            raise KernelTypeError(f"cannot compare {self.name} and {other.name}: types differ")
        return [(x, self.rows[x], other.rows[x]) for x in self.dom if self.rows[x] != other.rows[x]]

    def is_deterministic_by_naturality(self) -> bool:
        """Naturality of copy: k ; copy == copy ; (k (x) k)."""
        cls = type(self)
        return (self >> cls.copy(self.cod)) == (cls.copy(self.dom) >> (self @ self))

    # subclasses: _check_row, then, tensor, identity, copy, delete, swap, from_fn, is_deterministic, support

    @classmethod
    def delete(cls, s: FinSet) -> "Kernel":
        return cls.from_fn(TotalFn.constant(s, UNIT, UNIT_ELEMENT, f"del_{s.label}"))

    @classmethod
    def identity(cls, s: FinSet) -> "Kernel":
        return cls.from_fn(TotalFn.identity(s))

    @classmethod
    def copy(cls, s: FinSet) -> "Kernel":
        ss = product(s, s)
        return cls.from_fn(TotalFn(s, ss, {x: join((x, x)) for x in s}, f"copy_{s.label}"))

    @classmethod
    def swap(cls, a: FinSet, b: FinSet) -> "Kernel":
        ab, ba = product(a, b), product(b, a)
        table = {}
        for e in ab:
            x, y = split_pair(a, e)
            table[e] = join((y, x))
        return cls.from_fn(TotalFn(ab, ba, table, f"swap_{a.label},{b.label}"))

    def _require_composable(self, other: "Kernel"):
        if type(other) is not type(self):
            raise KernelTypeError(f"cannot mix {self.flavor} and {other.flavor} kernels")
        if self.cod != other.dom:
            raise KernelTypeError(
                f"cannot compose {self.name} : {self.dom.label} -> {self.cod.label} "
                f"with {other.name} : {other.dom.label} -> {other.cod.label}")


class RelKernel(Kernel):
    """A left-total relation: each domain element maps to a nonempty subset of the codomain."""

    flavor = "rel"
    __slots__ = ()

    @staticmethod
    def _check_row(name, dom, cod, x, row):
        row = frozenset(row)
        if not row:
            raise SpecError(f"{name}: empty image at {dom.fmt(x)} (relation must be left-total)")
        for y in row:
            if y not in cod:
                raise SpecError(f"{name}: {cod.fmt(y)} not in codomain {cod.label}")
        return row

    @classmethod
    def from_fn(cls, f: TotalFn) -> "RelKernel":
        return cls(f.dom, f.cod, {x: (f.table[x],) for x in f.dom}, f.name)

    @classmethod
    def preimage(cls, f: TotalFn) -> "RelKernel":
        fib = f.fibres()
        unhit = [b for b, xs in fib.items() if not xs]
        if unhit:
            raise PreconditionError(f"{f.name} is not surjective: nothing maps to {f.cod.fmt(unhit[0])}")
        return cls(f.cod, f.dom, fib, f"{f.name}^-1")

    def then(self, other: "RelKernel") -> "RelKernel":
        self._require_composable(other)
        rows = {}
        for x, ys in self.rows.items():
            out = set()
            for y in ys:
                out |= other.rows[y]
            rows[x] = out
        return RelKernel(self.dom, other.cod, rows, f"{self.name};{other.name}")

    def tensor(self, other: "RelKernel") -> "RelKernel":
        if type(other) is not RelKernel:
            raise KernelTypeError("cannot tensor rel with stoch")
        dom, cod = product(self.dom, other.dom), product(self.cod, other.cod)
        rows = {}
        for e in dom:
            a, b = split_pair(self.dom, e)
            rows[e] = {join((y, z)) for y in self.rows[a] for z in other.rows[b]}
        return RelKernel(dom, cod, rows, f"({self.name}(x){other.name})")

    def is_deterministic(self) -> bool:
        return all(len(r) == 1 for r in self.rows.values())

    def support(self, x) -> frozenset:
        return self.rows[x]

    def as_fn(self) -> TotalFn:
        if not self.is_deterministic():
            raise PreconditionError(f"{self.name} is not deterministic")
        return TotalFn(self.dom, self.cod, {x: next(iter(r)) for x, r in self.rows.items()}, self.name)


class StochKernel(Kernel):
    """Row-stochastic table of exact rationals. Rows store only positive weights."""

    flavor = "stoch"
    __slots__ = ()

    @staticmethod
    def _check_row(name, dom, cod, x, row):
        clean = {}
        for y, w in dict(row).items():
            w = Fraction(w)
            if y not in cod:
                raise SpecError(f"{name}: {cod.fmt(y)} not in codomain {cod.label}")
            if w < 0:
                raise SpecError(f"{name}: negative weight at ({dom.fmt(x)},{cod.fmt(y)})")
            if w:
                clean[y] = clean.get(y, Fraction(0)) + w
        if sum(clean.values(), Fraction(0)) != 1:
            raise SpecError(f"{name}: row {dom.fmt(x)} sums to {sum(clean.values(), Fraction(0))}, not 1")
        return clean

    @classmethod
    def from_fn(cls, f: TotalFn) -> "StochKernel":
        return cls(f.dom, f.cod, {x: {f.table[x]: 1} for x in f.dom}, f.name)

    @classmethod
    def uniform(cls, dom: FinSet, cod: FinSet, name: str = "uniform") -> "StochKernel":
        w = Fraction(1, len(cod))
        return cls(dom, cod, {x: {y: w for y in cod} for x in dom}, name)

    def then(self, other: "StochKernel") -> "StochKernel":
        self._require_composable(other)
        rows = {}
        for x, r in self.rows.items():
            out: dict = {}
            for y, w in r.items():
                for z, v in other.rows[y].items():
                    out[z] = out.get(z, Fraction(0)) + w * v
            rows[x] = out
        return StochKernel(self.dom, other.cod, rows, f"{self.name};{other.name}")

    def tensor(self, other: "StochKernel") -> "StochKernel":
        if type(other) is not StochKernel:
            raise KernelTypeError("cannot tensor stoch with rel")
        dom, cod = product(self.dom, other.dom), product(self.cod, other.cod)
        rows = {}
        for e in dom:
            a, b = split_pair(self.dom, e)
            rows[e] = {join((y, z)): w * v for y, w in self.rows[a].items() for z, v in other.rows[b].items()}
        return StochKernel(dom, cod, rows, f"({self.name}(x){other.name})")

    def is_deterministic(self) -> bool:
        return all(len(r) == 1 for r in self.rows.values())

    def support(self, x) -> frozenset:
        return frozenset(self.rows[x])

    def prob(self, y, x=UNIT_ELEMENT) -> Fraction:
        return self.rows[x].get(y, Fraction(0))


FLAVORS = {"rel": RelKernel, "stoch": StochKernel}


def kernel_class(flavor: str) -> type:
    try:
        return FLAVORS[flavor]
    except KeyError:
        raise SpecError(f"unknown flavor {flavor!r}, expected rel or stoch") from None


def distribution(cod: FinSet, weights: Mapping | Sequence, name: str = "p") -> StochKernel:
    """A state 1 -> cod; ``weights`` is a mapping or a sequence in cod's order."""
    if not isinstance(weights, Mapping):
        weights = dict(zip(cod.elements, weights))
    return StochKernel(UNIT, cod, {UNIT_ELEMENT: weights}, name)


def possibility(cod: FinSet, support, name: str = "p") -> RelKernel:
    return RelKernel(UNIT, cod, {UNIT_ELEMENT: support}, name)


def rel_compose(f: RelKernel, g: RelKernel) -> RelKernel:
    return f.then(g)


def rel_tensor(f: RelKernel, g: RelKernel) -> RelKernel:
    return f.tensor(g)


def stoch_compose(f: StochKernel, g: StochKernel) -> StochKernel:
    return f.then(g)


def stoch_tensor(f: StochKernel, g: StochKernel) -> StochKernel:
    return f.tensor(g)


def is_deterministic(k: Kernel) -> bool:
    structural = k.is_deterministic()
    if structural != k.is_deterministic_by_naturality():
        raise InvariantViolation(f"{k.name}: structural and equational determinism disagree")
    return structural


# --- equation checks ----------------------------------------------------------


@dataclass
class EquationCheck:
    """Both sides of an equation between kernels and where they differ.

    Witnesses are ``(input, lhs_row, rhs_row)``. ``convention_rows`` lists
    inputs whose value was fixed by a zero-evidence convention rather
    than by the data; it is informational only.
    """

    holds: bool
    lhs: Kernel
    rhs: Kernel
    witnesses: list = field(default_factory=list)
    convention_rows: list = field(default_factory=list)
    vacuous: bool = False

    def __bool__(self):
        return self.holds


def _compare(lhs: Kernel, rhs: Kernel, **kw) -> EquationCheck:
    w = lhs.disagreements(rhs)
    return EquationCheck(not w, lhs, rhs, w, **kw)


def _same_flavor(*ks: Kernel) -> type:
    cls = type(ks[0])
    for k in ks[1:]:
        if type(k) is not cls:
            raise KernelTypeError("all kernels in one equation must share a flavor")
    return cls


def _as_kernel(c, cls: type) -> Kernel:
    if isinstance(c, TotalFn):
        return cls.from_fn(c)
    if type(c) is not cls:
        raise KernelTypeError(f"expected a {cls.flavor} kernel or a function")
    return c


def bayes_sides(f: Kernel, p: Kernel, fdag: Kernel) -> tuple[Kernel, Kernel]:
    """Joint on X (x) Y two ways: prior then likelihood, or evidence then posterior."""
    cls = _same_flavor(f, p, fdag)
    X, Y = f.dom, f.cod
    if p.cod != X or not p.dom.is_unit:
        raise KernelTypeError("prior must be a state 1 -> dom(f)")
    if fdag.dom != Y or fdag.cod != X:
        raise KernelTypeError("inverse must have type cod(f) -> dom(f)")
    lhs = p >> cls.copy(X) >> (cls.identity(X) @ f)
    rhs = p >> f >> cls.copy(Y) >> (fdag @ cls.identity(Y))
    return lhs, rhs


def check_bayes_inverse(f: Kernel, p: Kernel, fdag: Kernel) -> EquationCheck:
    lhs, rhs = bayes_sides(f, p, fdag)
    return _compare(lhs, rhs)


def bayes_invert_stoch(f: StochKernel, p: StochKernel) -> StochKernel:
    """Posterior by Bayes' rule; zero-evidence observations get the uniform row."""
    if p.cod != f.dom or not p.dom.is_unit:
        raise KernelTypeError("prior must be a state on dom(f)")
    prior = p.rows[UNIT_ELEMENT]
    rows = {}
    for y in f.cod:
        joint = {x: w * f.rows[x].get(y, 0) for x, w in prior.items()}
        evidence = sum(joint.values(), Fraction(0))
        if evidence:
            rows[y] = {x: v / evidence for x, v in joint.items() if v}
        else:
            rows[y] = {x: Fraction(1, len(f.dom)) for x in f.dom}
    fdag = StochKernel(f.cod, f.dom, rows, f"{f.name}^dagger")
    if not check_bayes_inverse(f, p, fdag):
        raise InvariantViolation("Bayes-rule inverse fails the joint equation")
    return fdag


def bayes_invert_rel(f: RelKernel, p: RelKernel) -> RelKernel:
    """Possibilistic posterior; unreachable observations get the whole domain."""
    if p.cod != f.dom or not p.dom.is_unit:
        raise KernelTypeError("prior must be a state on dom(f)")
    prior = p.rows[UNIT_ELEMENT]
    rows = {}
    for y in f.cod:
        post = {x for x in prior if y in f.rows[x]}
        rows[y] = post or set(f.dom)
    fdag = RelKernel(f.cod, f.dom, rows, f"{f.name}^dagger")
    if not check_bayes_inverse(f, p, fdag):
        raise InvariantViolation("possibilistic inverse fails the joint equation")
    return fdag


def zero_evidence_rows(f: Kernel, p: Kernel) -> list:
    """Observations with no support under the prior: their inverse rows are convention."""
    reach = (p >> f).support(UNIT_ELEMENT)
    return [y for y in f.cod if y not in reach]


def param_bayes_sides(f: Kernel, psi: Kernel, fdag: Kernel) -> tuple[Kernel, Kernel]:
    """Both sides as kernels Theta -> X (x) Y; ``fdag`` has type Y (x) Theta -> X."""
    cls = _same_flavor(f, psi, fdag)
    X, Y, T = f.dom, f.cod, psi.dom
    if psi.cod != X:
        raise KernelTypeError("family must land in dom(f)")
    if fdag.dom != product(Y, T) or fdag.cod != X:
        raise KernelTypeError("parametrised inverse must have type Y (x) Theta -> X")
    lhs = psi >> cls.copy(X) >> (cls.identity(X) @ f)
    rhs = (cls.copy(T) >> ((psi >> f) @ cls.identity(T)) >> (cls.copy(Y) @ cls.identity(T))
           >> (cls.identity(Y) @ fdag) >> cls.swap(Y, X))
    return lhs, rhs


def check_param_bayes_inverse(f: Kernel, psi: Kernel, fdag: Kernel) -> EquationCheck:
    lhs, rhs = param_bayes_sides(f, psi, fdag)
    return _compare(lhs, rhs)


def _deterministic_update(c, cls: type, Y: FinSet, T: FinSet) -> Kernel:
    ck = _as_kernel(c, cls)
    if ck.dom != product(Y, T) or ck.cod != T:
        raise KernelTypeError("update must have type Y (x) Theta -> Theta")
    if not ck.is_deterministic():
        raise PreconditionError("parameter update must be deterministic")
    return ck


def check_conjugate_prior(psi: Kernel, f: Kernel, c) -> EquationCheck:
    """Is ``c ; psi`` a parametrised Bayesian inverse of ``f`` w.r.t. ``psi``?"""
    cls = _same_flavor(psi, f)
    ck = _deterministic_update(c, cls, f.cod, psi.dom)
    return check_param_bayes_inverse(f, psi, ck >> psi)


def filtering_sides(kappa: Kernel, p: Kernel, kdag: Kernel) -> tuple[Kernel, Kernel]:
    """Joint over (new hidden, observation): prior through the HMM, or marginal then posterior."""
    cls = _same_flavor(kappa, p, kdag)
    X = p.cod
    if kappa.dom != X:
        raise KernelTypeError("HMM domain must be the prior's set")
    Y = _observation_set(kappa, X)
    if kdag.dom != Y or kdag.cod != X:
        raise KernelTypeError("filtering inverse must have type Y -> X")
    lhs = p >> kappa
    obs = lhs >> (cls.delete(X) @ cls.identity(Y))
    rhs = obs >> cls.copy(Y) >> (kdag @ cls.identity(Y))
    return lhs, rhs


def _observation_set(kappa: Kernel, X: FinSet) -> FinSet:
    """Recover Y from cod(kappa) = X (x) Y."""
    cod = kappa.cod
    if cod.arity < X.arity:
        raise KernelTypeError("HMM codomain must be X (x) Y")
    seen = []
    for e in cod:
        x, y = split_pair(X, e)
        if x not in X:
            raise KernelTypeError("HMM codomain must be X (x) Y")
        if y not in seen:
            seen.append(y)
    k = X.arity
    factors = []
    acc = 0
    for f in cod.factors:
        if acc >= k:
            factors.append(f)
        acc += f.arity
    Y = FinSet("Y", seen, factors)
    if product(X, Y) != cod:
        raise KernelTypeError("HMM codomain is not a product X (x) Y")
    return Y


def check_filtering_inverse(kappa: Kernel, p: Kernel, kdag: Kernel) -> EquationCheck:
    lhs, rhs = filtering_sides(kappa, p, kdag)
    return _compare(lhs, rhs)


def filtering_conjugate_sides(psi: Kernel, kappa: Kernel, c, Y: FinSet | None = None) -> tuple[Kernel, Kernel]:
    """Consistency equation, both sides as kernels Theta -> X (x) Y."""
    cls = _same_flavor(psi, kappa)
    X, T = psi.cod, psi.dom
    if kappa.dom != X:
        raise KernelTypeError("HMM domain must be the hidden set")
    if Y is None:
        Y = _observation_set(kappa, X)
    elif product(X, Y) != kappa.cod:
        raise KernelTypeError("HMM must have type X -> X (x) Y")
    ck = _deterministic_update(c, cls, Y, T)
    lhs = psi >> kappa
    obs = lhs >> (cls.delete(X) @ cls.identity(Y))
    rhs = (cls.copy(T) >> (obs @ cls.identity(T)) >> (cls.copy(Y) @ cls.identity(T))
           >> (cls.identity(Y) @ (ck >> psi)) >> cls.swap(Y, X))
    return lhs, rhs


def check_filtering_conjugate(psi: Kernel, kappa: Kernel, c, Y: FinSet | None = None) -> EquationCheck:
    lhs, rhs = filtering_conjugate_sides(psi, kappa, c, Y)
    return _compare(lhs, rhs)


def positivity_sides(f: Kernel, g: Kernel) -> tuple[Kernel, Kernel]:
    """``f ; copy ; (g (x) id)`` against ``copy ; ((f;g) (x) f)``, both A -> C (x) B."""
    cls = _same_flavor(f, g)
    lhs = f >> cls.copy(f.cod) >> (g @ cls.identity(f.cod))
    rhs = cls.copy(f.dom) >> ((f >> g) @ f)
    return lhs, rhs


def check_positivity_instance(f: Kernel, g: Kernel) -> EquationCheck:
    lhs, rhs = positivity_sides(f, g)
    if not (f >> g).is_deterministic():
        return EquationCheck(True, lhs, rhs, [], vacuous=True)
    return _compare(lhs, rhs)


# --- expression terms ------------------------------------------------------------


class KernelExpr:
    """Term tree for string-diagram expressions; see `eval_expr`."""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Id(KernelExpr):
    set: object


@dataclass(frozen=True)
class Copy(KernelExpr):
    set: object


@dataclass(frozen=True)
class Del(KernelExpr):
    set: object


@dataclass(frozen=True)
class Swap(KernelExpr):
    left: object
    right: object


@dataclass(frozen=True)
class Named(KernelExpr):
    ref: object


@dataclass(frozen=True)
class FromFn(KernelExpr):
    fn: object


@dataclass(frozen=True)
class Preimage(KernelExpr):
    fn: object


@dataclass(frozen=True)
class Seq(KernelExpr):
    left: KernelExpr
    right: KernelExpr


@dataclass(frozen=True)
class Par(KernelExpr):
    left: KernelExpr
    right: KernelExpr


def _ref_name(r) -> str:
    if isinstance(r, str):
        return r
    return getattr(r, "label", None) or getattr(r, "name", "?")


def render(e: KernelExpr, ascii: bool = False) -> str:
    tensor = " (x) " if ascii else " ⊗ "

    def go(e, ctx):
        if isinstance(e, Id):
            return f"id[{_ref_name(e.set)}]"
        if isinstance(e, Copy):
            return f"copy[{_ref_name(e.set)}]"
        if isinstance(e, Del):
            return f"del[{_ref_name(e.set)}]"
        if isinstance(e, Swap):
            return f"swap[{_ref_name(e.left)},{_ref_name(e.right)}]"
        if isinstance(e, Named):
            return _ref_name(e.ref)
        if isinstance(e, FromFn):
            return f"fn {_ref_name(e.fn)}"
        if isinstance(e, Preimage):
            return f"pre {_ref_name(e.fn)}"
        if isinstance(e, Seq):
            s = f"{go(e.left, 'seq')} ; {go(e.right, 'seq')}"
            return s if ctx in ("top", "seq") else f"({s})"
        if isinstance(e, Par):
            s = f"{go(e.left, 'par')}{tensor}{go(e.right, 'parr')}"
            return s if ctx in ("top", "seq", "par") else f"({s})"
        raise TypeError(e)

    return go(e, "top")


def eval_expr(e: KernelExpr, flavor: str = "rel", *, sets: Mapping | None = None,
              functions: Mapping | None = None, kernels: Mapping | None = None) -> Kernel:
    """Evaluate a term compositionally in one flavor.

    References in the term may be objects (FinSet, TotalFn, Kernel) or
    names looked up in ``sets``, ``functions`` and ``kernels``. ``1``
    always names the unit set.
    """
    cls = kernel_class(flavor)
    sets = dict(sets or {})
    sets.setdefault("1", UNIT)
    functions = functions or {}
    kernels = kernels or {}

    def lookup(ref, table, kind, want):
        if isinstance(ref, want):
            return ref
        try:
            return table[ref]
        except (KeyError, TypeError):
            raise SpecError(f"unknown {kind} {ref!r} in {render(e)}") from None

    def set_of(ref):
        if isinstance(ref, str) and "*" in ref:
            return product(*(lookup(r.strip(), sets, "set", FinSet) for r in ref.split("*")))
        return lookup(ref, sets, "set", FinSet)

    def go(t):
        if isinstance(t, Id):
            return cls.identity(set_of(t.set))
        if isinstance(t, Copy):
            return cls.copy(set_of(t.set))
        if isinstance(t, Del):
            return cls.delete(set_of(t.set))
        if isinstance(t, Swap):
            return cls.swap(set_of(t.left), set_of(t.right))
        if isinstance(t, FromFn):
            return cls.from_fn(lookup(t.fn, functions, "function", TotalFn))
        if isinstance(t, Preimage):
            if cls is not RelKernel:
                raise KernelTypeError(f"preimage is only defined for rel kernels: {render(t)}")
            return RelKernel.preimage(lookup(t.fn, functions, "function", TotalFn))
        if isinstance(t, Named):
            k = lookup(t.ref, kernels, "kernel", Kernel)
            if type(k) is not cls:
                raise KernelTypeError(f"kernel {_ref_name(t.ref)} is {k.flavor}, evaluating as {flavor}")
            return k
        if isinstance(t, Seq):
            left, right = go(t.left), go(t.right)
            if left.cod != right.dom:
                raise KernelTypeError(
                    f"ill-typed {render(t)}: left ends in {left.cod.label}, right starts at {right.dom.label}")
            return left >> right
        if isinstance(t, Par):
            return go(t.left) @ go(t.right)
        raise KernelTypeError(f"not a kernel expression: {t!r}")

    return go(e)
