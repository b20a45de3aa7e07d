"""Environment / plant / controller composites and the internal-model pipeline.

`run_pipeline` goes from a regulation problem to the two model maps:
the autonomous attracting controller modelling the attracting full system,
and (when every environment state on the attractor is visited by exactly
one full state) modelling the attracting environment too. Every
assumption is checked and reported on its own so a failing hypothesis is
visible rather than silently blocking later stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import InvariantViolation, PreconditionError, SpecError
from .finsys import (
    UNIT,
    UNIT_ELEMENT,
    AttractionReport,
    Element,
    FinSet,
    ModelReport,
    SubsystemWitness,
    System,
    SystemMap,
    TotalFn,
    check_model,
    check_system_map,
    compose_maps,
    guaranteed_reach,
    is_attracting,
    is_forward_invariant,
    join,
    make_map,
    maps_equal,
    parts,
    product,
    split_pair,
)


@dataclass(frozen=True)
class RegulationProblem:
    env: System
    plant: System
    controller: System
    targets: frozenset
    attractor: frozenset | None = None
    name: str = "problem"

    def __post_init__(self):
        if not self.env.autonomous:
            raise SpecError(f"{self.name}: environment {self.env.name} must be autonomous")
        if self.plant.inputs != product(self.env.states, self.controller.states):
            raise SpecError(f"{self.name}: plant inputs must be E * C")
        if self.controller.inputs != self.plant.states:
            raise SpecError(f"{self.name}: controller inputs must be the plant states")
        ep = product(self.env.states, self.plant.states)
        for t in self.targets:
            if t not in ep:
                raise SpecError(f"{self.name}: target {t!r} is not an environment-plant state")


@dataclass(frozen=True)
class FullSystem:
    """The autonomous composite on E * P * C, with its three projections."""

    system: System
    env: System
    plant: System
    controller: System

    @property
    def states(self) -> FinSet:
        return self.system.states

    def split(self, s: Element) -> tuple:
        ps = parts(s)
        a, b = self.env.states.arity, self.plant.states.arity
        return join(ps[:a]), join(ps[a:a + b]), join(ps[a + b:])

    def proj_env(self, s):
        return self.split(s)[0]

    def proj_plant(self, s):
        return self.split(s)[1]

    def proj_controller(self, s):
        return self.split(s)[2]

    def fmt(self, s) -> str:
        return self.system.states.fmt(s)


def assemble_full_system(prob: RegulationProblem) -> FullSystem:
    E, P, C = prob.env, prob.plant, prob.controller
    S = product(E.states, P.states, C.states, label="S")
    table = {}
    a, b = E.states.arity, P.states.arity
    for s in S:
        ps = parts(s)
        e, p, c = join(ps[:a]), join(ps[a:a + b]), join(ps[a + b:])
        table[s] = join((E.update.table[e],
                         P.update.table[join((p, e, c))],
                         C.update.table[join((c, p))]))
    full = System(S, UNIT, TotalFn(S, S, table, "upd_S"), f"{prob.name}.S")
    return FullSystem(full, E, P, C)


def lift_targets(prob: RegulationProblem, full: FullSystem | None = None) -> frozenset:
    full = full or assemble_full_system(prob)
    return frozenset(s for s in full.states if join(full.split(s)[:2]) in prob.targets)


# --- regulation condition ------------------------------------------------------


def maximal_subsystem_within(sys: System, allowed: Iterable) -> set:
    """Greatest forward-invariant subset of ``allowed``."""
    cur = set(allowed)
    while True:
        keep = {x for x in cur if all(sys.update.table[join((x, i))] in cur for i in sys.inputs)}
        if keep == cur:
            return cur
        cur = keep


@dataclass
class AttractorResult:
    witness: SubsystemWitness | None
    failure: str | None
    candidate: frozenset
    attraction: AttractionReport | None = None

    @property
    def horizon(self) -> int | None:
        return self.attraction.horizon if self.attraction else None


def find_regulated_attractor(full: System | FullSystem, K: Iterable) -> AttractorResult:
    """Largest subsystem inside K, accepted only if nonempty and attracting.

    ``failure`` is ``"empty"`` or ``"not attracting"`` when it is rejected.
    """
    sys = full.system if isinstance(full, FullSystem) else full
    K = set(K)
    for s in K:
        sys.states.require(s, "state")
    cand = maximal_subsystem_within(sys, K)
    if not cand:
        return AttractorResult(None, "empty", frozenset())
    rep = is_attracting(sys, cand)
    if not rep:
        return AttractorResult(None, "not attracting", frozenset(cand), rep)
    return AttractorResult(SubsystemWitness(sys, frozenset(cand), rep.horizon), None, frozenset(cand), rep)


def validate_attractor(full: FullSystem, K: Iterable, subset: Iterable) -> AttractorResult:
    """Check a user-supplied attracting full system instead of computing one."""
    subset, K = set(subset), set(K)
    outside = [s for s in subset if s not in K]
    if not subset:
        return AttractorResult(None, "empty", frozenset())
    if outside:
        return AttractorResult(None, "outside targets", frozenset(subset))
    if not is_forward_invariant(full.system, subset):
        return AttractorResult(None, "not forward-invariant", frozenset(subset))
    rep = is_attracting(full.system, subset)
    if not rep:
        return AttractorResult(None, "not attracting", frozenset(subset), rep)
    return AttractorResult(SubsystemWitness(full.system, frozenset(subset), rep.horizon), None, frozenset(subset), rep)


# --- attracting controller ------------------------------------------------------


@dataclass
class AttractingController:
    c_star: FinSet
    p_star: FinSet
    update: TotalFn
    closure_defect: list = field(default_factory=list)

    @property
    def well_defined(self) -> bool:
        return not self.closure_defect

    def system(self) -> System:
        if self.closure_defect:
            c, p = self.closure_defect[0]
            raise PreconditionError(f"attracting controller is not closed: upd_C({c},{p}) leaves C*")
        table = self.update.table
        return System(self.c_star, self.p_star,
                      TotalFn(product(self.c_star, self.p_star), self.c_star, table, "upd_C*"), "C*")


def attracting_controller(full: FullSystem, s_star: SubsystemWitness) -> AttractingController:
    members = s_star.ordered()
    C, P = full.controller.states, full.plant.states
    c_star = C.subset({full.proj_controller(s) for s in members}, "C*")
    p_star = P.subset({full.proj_plant(s) for s in members}, "P*")
    dom = product(c_star, p_star)
    table, defect = {}, []
    for k in dom:
        c, p = split_pair(c_star, k)
        nxt = full.controller.update.table[join((c, p))]
        table[k] = nxt
        if nxt not in c_star:
            defect.append((c, p))
    return AttractingController(c_star, p_star, TotalFn(dom, C, table, "upd_C|C*xP*"), defect)


@dataclass
class AutonomizeResult:
    system: System | None
    counterexample: tuple | None = None

    def __bool__(self):
        return self.system is not None


def autonomize_controller(ac: AttractingController) -> AutonomizeResult:
    """Drop the plant input if the restricted controller ignores it.

    On failure the counterexample is ``(c, p1, p2)`` with differing successors.
    """
    if ac.closure_defect:
        c, p = ac.closure_defect[0]
        raise PreconditionError(f"closure defect at ({c},{p}): attracting controller construction failed")
    nxt = {}
    for c in ac.c_star:
        first = None
        for p in ac.p_star:
            v = ac.update.table[join((c, p))]
            if first is None:
                first = (p, v)
            elif v != first[1]:
                return AutonomizeResult(None, (c, first[0], p))
        nxt[c] = first[1]
    return AutonomizeResult(System(ac.c_star, UNIT, TotalFn(ac.c_star, ac.c_star, nxt, "upd_C*aut"), "C*aut"))


def attracting_environment(full: FullSystem, s_star: SubsystemWitness) -> System:
    E = full.env
    e_star = E.states.subset({full.proj_env(s) for s in s_star.subset}, "E*")
    table = {}
    for e in e_star:
        nxt = E.update.table[e]
        if nxt not in e_star:
            raise InvariantViolation(f"environment restriction escapes E* at {e}")
        table[e] = nxt
    return System(e_star, UNIT, TotalFn(e_star, e_star, table, "upd_E*"), "E*")


@dataclass
class EnvIso:
    bijective: bool
    commutes: bool
    section: dict = field(default_factory=dict)
    collisions: list = field(default_factory=list)
    non_commuting: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.bijective and self.commutes

    def __bool__(self):
        return self.ok


def check_env_iso(full: FullSystem, s_star: SubsystemWitness, e_star: System) -> EnvIso:
    """Is projection to the environment a bijection S* -> E* commuting with both dynamics?

    ``section`` maps each environment state to its unique full state;
    ``collisions`` lists ``(e, [s1, s2, ...])`` where uniqueness fails.
    """
    over: dict = {e: [] for e in e_star.states}
    for s in s_star.ordered():
        over[full.proj_env(s)].append(s)
    collisions = [(e, ss) for e, ss in over.items() if len(ss) != 1]
    if collisions:
        return EnvIso(False, False, {}, collisions)
    section = {e: ss[0] for e, ss in over.items()}
    upd = full.system.update.table
    bad = [e for e in e_star.states if section[e_star.update.table[e]] != upd[section[e]]]
    # forward direction (projection) commutes for any full state; checked for completeness
    bad += [s for s in s_star.subset if full.proj_env(upd[s]) != e_star.update.table[full.proj_env(s)]]
    return EnvIso(True, not bad, section, [], bad)


# --- model maps ------------------------------------------------------------------


def controller_projection(s_star_sys: System, full: FullSystem, c_star_sys: System) -> SystemMap:
    """pi_{C*}: S* -> C*, reading the plant state as the controller's input."""
    on_states = {s: full.proj_controller(s) for s in s_star_sys.states}
    on_inputs = {s: full.proj_plant(s) for s in s_star_sys.states}
    return make_map(s_star_sys, c_star_sys, on_states, on_inputs, "pi_C*")


def forget_inputs(c_star_sys: System, c_aut: System) -> SystemMap:
    """(id, !): C* -> C*aut."""
    return make_map(c_star_sys, c_aut, {c: c for c in c_star_sys.states}, None, "(id,!)")


def imp_full_model(full: FullSystem, s_star: SubsystemWitness, c_aut: System) -> tuple[SystemMap, ModelReport]:
    if c_aut is None:
        raise PreconditionError("no autonomous attracting controller: no model of the attracting system")
    s_sys = s_star.system("S*")
    pi = make_map(s_sys, c_aut, {s: full.proj_controller(s) for s in s_sys.states}, None, "pi_C*aut")
    rep = check_model(pi)
    if not rep:
        raise InvariantViolation(f"projection to C*aut is not a model: {rep.counterexamples[:3]}")
    return pi, rep


def imp_env_model(e_star: System, iso: EnvIso, pi: SystemMap) -> tuple[SystemMap, ModelReport]:
    if iso is None or not iso.ok:
        raise PreconditionError("environment isomorphism unavailable: no model of the environment")
    s_sys = pi.source
    inv = make_map(e_star, s_sys, dict(iso.section), None, "iso^-1")
    if not check_system_map(inv):
        raise InvariantViolation("inverse of the environment projection is not a map of systems")
    nu = compose_maps(inv, pi)
    nu = SystemMap(nu.source, nu.target, nu.on_states, nu.on_inputs, "nu")
    rep = check_model(nu)
    if not rep:
        raise InvariantViolation(f"nu is not a model: {rep.counterexamples[:3]}")
    return nu, rep


@dataclass
class ImpPipelineReport:
    problem: RegulationProblem
    full: FullSystem
    lifted_targets: frozenset
    attractor: AttractorResult
    controller: AttractingController | None = None
    autonomous: AutonomizeResult | None = None
    e_star: System | None = None
    env_iso: EnvIso | None = None
    model_full: SystemMap | None = None
    model_full_report: ModelReport | None = None
    model_env: SystemMap | None = None
    model_env_report: ModelReport | None = None
    factorisation_ok: bool = False

    @property
    def s_star(self) -> SubsystemWitness | None:
        return self.attractor.witness

    @property
    def c_aut(self) -> System | None:
        return self.autonomous.system if self.autonomous else None

    @property
    def assumptions(self) -> dict:
        return {
            "A1_factorisation": True,
            "A2_regulation": self.attractor.witness is not None,
            "C2_controller_closed": bool(self.controller and self.controller.well_defined),
            "A3_autonomous_controller": bool(self.autonomous),
            "A4_env_isomorphism": bool(self.env_iso),
        }

    @property
    def controller_model_ok(self) -> bool:
        return self.model_full is not None

    @property
    def env_model_ok(self) -> bool:
        return self.model_env is not None

    @property
    def passed(self) -> bool:
        return all(self.assumptions.values()) and self.controller_model_ok and self.env_model_ok


def run_pipeline(prob: RegulationProblem) -> ImpPipelineReport:
    full = assemble_full_system(prob)
    K = lift_targets(prob, full)
    if prob.attractor is not None:
        att = validate_attractor(full, K, prob.attractor)
    else:
        att = find_regulated_attractor(full, K)
    rep = ImpPipelineReport(prob, full, K, att, factorisation_ok=True)
    if att.witness is None:
        return rep
    s_star = att.witness
    rep.controller = attracting_controller(full, s_star)
    rep.e_star = attracting_environment(full, s_star)
    rep.env_iso = check_env_iso(full, s_star, rep.e_star)
    if not rep.controller.well_defined:
        return rep
    rep.autonomous = autonomize_controller(rep.controller)
    if not rep.autonomous:
        return rep
    rep.model_full, rep.model_full_report = imp_full_model(full, s_star, rep.autonomous.system)
    via = compose_maps(controller_projection(rep.model_full.source, full, rep.controller.system()),
                       forget_inputs(rep.controller.system(), rep.autonomous.system))
    if not maps_equal(via, rep.model_full):
        raise InvariantViolation("pi_C*aut differs from pi_C* followed by (id,!)")
    if rep.env_iso.ok:
        rep.model_env, rep.model_env_report = imp_env_model(rep.e_star, rep.env_iso, rep.model_full)
    return rep


__all__ = [
    "RegulationProblem", "FullSystem", "assemble_full_system", "lift_targets",
    "maximal_subsystem_within", "find_regulated_attractor", "validate_attractor",
    "AttractingController", "attracting_controller", "AutonomizeResult", "autonomize_controller",
    "attracting_environment", "EnvIso", "check_env_iso", "controller_projection", "forget_inputs",
    "imp_full_model", "imp_env_model", "ImpPipelineReport", "run_pipeline", "guaranteed_reach",
]
