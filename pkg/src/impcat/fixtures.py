"""Bundled example systems.

``e1``: a four-state clock modelled by a two-state clock (state index mod 2).
``e2``: mod-3 tracking. The environment counts e -> e+1 mod 3, the plant
records an error flag and the last control value, and the controller
advances by one when the plant reports no error and otherwise jumps to
the environment value the plant reported.
"""

from __future__ import annotations

from .finsys import UNIT, FinSet, System, SystemMap, autonomous_system, join, make_map, make_system, product
from .impkit import RegulationProblem

BOT = "⊥"


def clock(n: int, prefix: str, name: str) -> System:
    states = FinSet(prefix.upper(), [f"{prefix}{k}" for k in range(n)])
    return autonomous_system(states, {f"{prefix}{k}": f"{prefix}{(k + 1) % n}" for k in range(n)}, name)


def clock2() -> System:
    s = FinSet("M", ["m0", "m1"])
    return autonomous_system(s, {"m0": "m1", "m1": "m0"}, "Clock2")


def clock4() -> System:
    s = FinSet("X", ["x0", "x1", "x2", "x3"])
    return autonomous_system(s, {"x0": "x1", "x1": "x2", "x2": "x3", "x3": "x0"}, "Clock4")


def e1() -> SystemMap:
    c4, c2 = clock4(), clock2()
    return make_map(c4, c2, {"x0": "m0", "x1": "m1", "x2": "m0", "x3": "m1"}, name="mu")


def e1_broken() -> SystemMap:
    """mu_s perturbed at x1: the square fails at x0."""
    c4, c2 = clock4(), clock2()
    return make_map(c4, c2, {"x0": "m0", "x1": "m0", "x2": "m0", "x3": "m1"}, name="mu")


Z3 = ("0", "1", "2")


def _inc(v: str, k: int = 1) -> str:
    return str((int(v) + k) % 3)


def e2(controller_rule=None, name: str = "tracking") -> RegulationProblem:
    """Mod-3 tracking; ``controller_rule(c, s, o)`` replaces the controller update."""
    E = FinSet("E", Z3)
    Sflag = FinSet("Sp", (BOT,) + Z3)
    O = FinSet("O", Z3)
    P = product(Sflag, O, label="P")
    C = FinSet("C", Z3)
    env = autonomous_system(E, {e: _inc(e) for e in E}, "Env")

    plant_table = {}
    for p in P:
        s, o = P.split(p)
        for e in E:
            for c in C:
                plant_table[join((p, e, c))] = join((BOT, c)) if c == _inc(e) else join((e, c))
    plant = make_system(P, product(E, C), plant_table, "Plant")

    def default_rule(c, s, o):
        return _inc(c) if s == BOT else s

    rule = controller_rule or default_rule
    ctrl_table = {}
    for c in C:
        for p in P:
            s, o = P.split(p)
            ctrl_table[join((c, p))] = rule(c, s, o)
    ctrl = make_system(C, P, ctrl_table, "Ctrl")
    targets = frozenset(join((e, (BOT, e))) for e in E)
    return RegulationProblem(env, plant, ctrl, targets, name=name)


def e2_nonautonomous_controller() -> RegulationProblem:
    """On the target states the controller reads the plant's last value: o + 2.

    This agrees with c + 1 along the attractor but differs across P*,
    so the attracting controller cannot be autonomised.
    """
    def rule(c, s, o):
        return _inc(o, 2) if s == BOT else s
    return e2(rule, "tracking_nonaut")


def doubled_controller() -> RegulationProblem:
    """One environment state, two parallel controller orbits over it."""
    E = FinSet("E", ["e"])
    P = FinSet("P", ["p"])
    C = FinSet("C", ["a", "b"])
    env = autonomous_system(E, {"e": "e"}, "Env1")
    plant = make_system(P, product(E, C), {join(("p", "e", c)): "p" for c in C}, "Plant1")
    ctrl = make_system(C, P, {join((c, "p")): c for c in C}, "Ctrl2")
    return RegulationProblem(env, plant, ctrl, frozenset({join(("e", "p"))}), name="doubled")


def closure_defect_problem() -> RegulationProblem:
    """Attractor {(0,a,u),(0,b,v)}; the never-co-occurring pair (u,b) exits C* = {u,v}."""
    E = FinSet("E", ["0"])
    P = FinSet("P", ["a", "b"])
    C = FinSet("C", ["u", "v", "w"])
    env = autonomous_system(E, {"0": "0"}, "EnvD")
    plant = make_system(P, product(E, C),
                        {join((p, "0", c)): ("b" if c == "u" else "a") for p in P for c in C}, "PlantD")
    ctrl_rule = {("u", "a"): "v", ("v", "b"): "u", ("u", "b"): "w", ("v", "a"): "u", ("w", "a"): "u", ("w", "b"): "u"}
    ctrl = make_system(C, P, {join(k): v for k, v in ctrl_rule.items()}, "CtrlD")
    targets = frozenset(join(("0", p)) for p in P)
    attractor = frozenset({join(("0", "a", "u")), join(("0", "b", "v"))})
    return RegulationProblem(env, plant, ctrl, targets, attractor, name="defect")


def single_point_problem() -> RegulationProblem:
    one = FinSet("One", ["o"])
    env = autonomous_system(one, {"o": "o"}, "E1pt")
    plant = make_system(FinSet("P1", ["q"]), product(one, FinSet("C1", ["k"])), {join(("q", "o", "k")): "q"}, "P1pt")
    ctrl = make_system(FinSet("C1", ["k"]), FinSet("P1", ["q"]), {join(("k", "q")): "k"}, "C1pt")
    return RegulationProblem(env, plant, ctrl, frozenset({join(("o", "q"))}), name="point")


__all__ = ["BOT", "UNIT", "clock", "clock2", "clock4", "e1", "e1_broken", "e2", "e2_nonautonomous_controller",
           "doubled_controller", "closure_defect_problem", "single_point_problem"]
