"""Fibres, closures, and the filtering interpretation induced by a model."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PreconditionError, SpecError
from .finsys import FinSet, System, SystemMap, TotalFn, check_model, join, product
from .kernelcat import EquationCheck, RelKernel, check_filtering_conjugate, check_positivity_instance


def preimage_kernel(f: TotalFn) -> RelKernel:
    return RelKernel.preimage(f)


def closure_kernel(f: TotalFn) -> RelKernel:
    """Send a to the class {a' : f(a') = f(a)}."""
    unhit = [b for b in f.cod if not f.fibre(b)]
    if unhit:
        raise PreconditionError(f"codomain mismatch: {f.name} does not hit {f.cod.fmt(unhit[0])}")
    cls = f.fibres()
    return RelKernel(f.dom, f.dom, {a: cls[f.table[a]] for a in f.dom}, f"<>{f.name}")


def diamond_update(sys: System, mu_s: TotalFn) -> RelKernel:
    """The update as seen through mu_s: step, then blur to the whole fibre."""
    if not sys.autonomous:
        raise PreconditionError(f"{sys.name} is not autonomous")
    if mu_s.dom != sys.states:
        raise SpecError("state map must start at the system's states")
    return RelKernel.from_fn(sys.update) >> closure_kernel(mu_s)


def _require_autonomous_model(mu: SystemMap):
    if not (mu.source.autonomous and mu.target.autonomous):
        raise PreconditionError("both systems must be autonomous")
    rep = check_model(mu)
    if not rep:
        raise PreconditionError(f"{mu.name} is not a model: {rep.counterexamples[:3]}")


def check_indexed_model(mu: SystemMap) -> EquationCheck:
    """mu_s^-1 ; <>upd_X == upd_M ; mu_s^-1, compared row by row over M."""
    _require_autonomous_model(mu)
    inv = preimage_kernel(mu.on_states)
    lhs = inv >> diamond_update(mu.source, mu.on_states)
    rhs = RelKernel.from_fn(mu.target.update) >> inv
    w = lhs.disagreements(rhs)
    return EquationCheck(not w, lhs, rhs, w)


@dataclass
class Reasoner:
    """A deterministic parameter update with an interpretation and hidden Markov model.

    ``model`` has type X -> X * Y: the new hidden state comes first, the
    emitted observation second.
    """

    params: FinSet
    observations: FinSet
    hidden: FinSet
    update: TotalFn
    interpretation: RelKernel
    model: RelKernel
    name: str = "reasoner"

    def __post_init__(self):
        if self.update.dom != product(self.observations, self.params) or self.update.cod != self.params:
            raise SpecError(f"{self.name}: update must have type Y * Theta -> Theta")
        if self.interpretation.dom != self.params or self.interpretation.cod != self.hidden:
            raise SpecError(f"{self.name}: interpretation must have type Theta -> X")
        if self.model.dom != self.hidden or self.model.cod != product(self.hidden, self.observations):
            raise SpecError(f"{self.name}: hidden Markov model must have type X -> X * Y")

    def consistency(self) -> EquationCheck:
        return check_filtering_conjugate(self.interpretation, self.model, self.update, self.observations)


def derive_interpretation(mu: SystemMap, name: str = "reasoner") -> Reasoner:
    _require_autonomous_model(mu)
    X, M = mu.source.states, mu.target.states
    Y = X
    c = TotalFn(product(Y, M), M, {join((y, m)): mu.target.update.table[m] for y in Y for m in M}, f"c_{mu.name}")
    psi = preimage_kernel(mu.on_states)
    kappa = RelKernel.copy(X) >> (diamond_update(mu.source, mu.on_states) @ RelKernel.identity(X))
    return Reasoner(M, Y, X, c, psi, RelKernel(kappa.dom, kappa.cod, kappa.rows, f"kappa_{mu.name}"), name)


@dataclass
class InterpretationReport:
    consistency: bool
    beliefs_disjoint: bool
    observations_ignored: bool
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.consistency and self.beliefs_disjoint and self.observations_ignored


def check_interpretation(r: Reasoner) -> InterpretationReport:
    """Witnesses are tagged: ``("consistency", theta, lhs, rhs)``,
    ``("overlap", theta1, theta2, common)``, ``("uses_observation", theta, y1, y2)``."""
    wit: list = []
    cons = r.consistency()
    wit += [("consistency",) + w for w in cons.witnesses]
    thetas = list(r.params)
    for a_i, a in enumerate(thetas):
        for b in thetas[a_i + 1:]:
            common = r.interpretation.rows[a] & r.interpretation.rows[b]
            if common:
                wit.append(("overlap", a, b, common))
    disjoint = not any(w[0] == "overlap" for w in wit)
    ignored = True
    for t in thetas:
        ys = list(r.observations)
        base = r.update.table[join((ys[0], t))]
        for y in ys[1:]:
            if r.update.table[join((y, t))] != base:
                ignored = False
                wit.append(("uses_observation", t, ys[0], y))
                break
    return InterpretationReport(cons.holds, disjoint, ignored, wit)


def imp_interpretations(report) -> tuple[Reasoner, Reasoner | None]:
    """Reasoners for the controller modelling the full attractor and, if available, the environment."""
    if report.model_full is None:
        raise PreconditionError("pipeline produced no model of the attracting full system")
    r_full = derive_interpretation(report.model_full, "reasoner_full")
    r_env = derive_interpretation(report.model_env, "reasoner_env") if report.model_env is not None else None
    return r_full, r_env


def model_chain(mu: SystemMap) -> dict:
    """Model => indexed diagram => consistent reasoner, plus the positivity step.

    Returns one flag per link; later links are only evaluated if ``model`` holds.
    """
    out = {"model": bool(check_model(mu))}
    if not out["model"]:
        return out
    out["indexed"] = check_indexed_model(mu).holds
    r = derive_interpretation(mu)
    rep = check_interpretation(r)
    out["consistency"] = rep.consistency
    out["beliefs_disjoint"] = rep.beliefs_disjoint
    out["observations_ignored"] = rep.observations_ignored
    belief_step = r.interpretation >> diamond_update(mu.source, mu.on_states)
    mu_k = RelKernel.from_fn(mu.on_states)
    out["key_step_deterministic"] = (belief_step >> mu_k).is_deterministic()
    pos = check_positivity_instance(belief_step, mu_k)
    out["positivity"] = pos.holds and not pos.vacuous
    return out
