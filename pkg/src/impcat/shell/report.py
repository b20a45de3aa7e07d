"""Plain-data reports with stable field names, rendered as text or JSON.

Every report dict carries ``kind``, ``passed`` and ``witnesses``; a passing
report always has an empty witness list.
"""

from __future__ import annotations

import json
from fractions import Fraction

from ..finsys import System, SystemMap, check_model, check_system_map
from ..impkit import ImpPipelineReport
from ..interp import InterpretationReport, Reasoner
from ..kernelcat import Kernel


def plain(v):
    """Recursively convert elements, sets and fractions to JSON-able data."""
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (frozenset, set)):
        return sorted((plain(x) for x in v), key=repr)
    if isinstance(v, dict):
        return {str(plain(k)) if not isinstance(k, str) else k: plain(x) for k, x in v.items()}
    if isinstance(v, (tuple, list)):
        return [plain(x) for x in v]
    return str(v)


def finish(rep: dict, passed: bool, witnesses: list) -> dict:
    rep["passed"] = bool(passed)
    rep["witnesses"] = [] if passed else plain(witnesses)
    return rep


def system_report(name: str, sys: System) -> dict:
    rep = {"kind": "system", "name": name, "autonomous": sys.autonomous,
           "states": len(sys.states), "inputs": len(sys.inputs)}
    return finish(rep, True, [])


def map_report(name: str, m: SystemMap) -> dict:
    chk = check_system_map(m)
    rep = {"kind": "map", "name": name, "commutes": chk.valid}
    return finish(rep, chk.valid, chk.counterexamples)


def model_report(name: str, m: SystemMap) -> dict:
    chk = check_model(m)
    rep = {"kind": "model", "name": name, "verdict": chk.verdict,
           "surjective_on_states": chk.surjective_on_states,
           "fibrewise_surjective_on_inputs": chk.fibrewise_surjective_on_inputs,
           "square_commutes": chk.square_commutes}
    return finish(rep, chk.is_model, chk.counterexamples)


def _table(m: SystemMap | None):
    return None if m is None else plain({x: m.on_states.table[x] for x in m.source.states})


def pipeline_report(r: ImpPipelineReport) -> dict:
    att = r.attractor
    wit: list = []
    if att.failure:
        wit.append(("attractor", att.failure, att.candidate))
    ctrl = r.controller
    if ctrl is not None:
        wit += [("closure_defect", c, p) for c, p in ctrl.closure_defect]
    if r.autonomous is not None and r.autonomous.counterexample:
        wit.append(("controller_reads_plant",) + tuple(r.autonomous.counterexample))
    if r.env_iso is not None:
        wit += [("env_collision", e, ss) for e, ss in r.env_iso.collisions]
        wit += [("env_non_commuting", s) for s in r.env_iso.non_commuting]
    rep = {
        "kind": "imp",
        "name": r.problem.name,
        "full_states": len(r.full.states),
        "targets": len(r.lifted_targets),
        "assumptions": r.assumptions,
        "attractor_failure": att.failure,
        "s_star": None if r.s_star is None else plain(r.s_star.ordered()),
        "s_star_size": None if r.s_star is None else len(r.s_star.subset),
        "horizon": att.horizon,
        "c_star": None if ctrl is None else plain(list(ctrl.c_star)),
        "p_star": None if ctrl is None else plain(list(ctrl.p_star)),
        "c_aut_update": None if r.c_aut is None else plain(dict(r.c_aut.update.table)),
        "e_star": None if r.e_star is None else plain(list(r.e_star.states)),
        "controller_model_ok": r.controller_model_ok,
        "env_model_ok": r.env_model_ok,
        "model_full": _table(r.model_full),
        "model_env": _table(r.model_env),
    }
    return finish(rep, r.passed, wit)


def _kernel_rows(k: Kernel) -> dict:
    return plain({x: k.rows[x] for x in k.dom})


def reasoner_report(r: Reasoner, chk: InterpretationReport) -> dict:
    rep = {"kind": "reasoner", "name": r.name,
           "params": len(r.params), "observations": len(r.observations), "hidden": len(r.hidden),
           "consistency": chk.consistency, "beliefs_disjoint": chk.beliefs_disjoint,
           "observations_ignored": chk.observations_ignored,
           "interpretation": _kernel_rows(r.interpretation)}
    return finish(rep, chk.passed, chk.witnesses)


def kernel_report(expr: str, k: Kernel) -> dict:
    rep = {"kind": "kernel", "expr": expr, "flavor": k.flavor, "dom": len(k.dom), "cod": len(k.cod),
           "rows": _kernel_rows(k)}
    return finish(rep, True, [])


def error_report(kind: str, message: str) -> dict:
    return {"kind": "error", "error": kind, "message": message, "passed": False, "witnesses": []}


def to_json(rep: dict) -> str:
    return json.dumps(rep, ensure_ascii=False, indent=2)


def to_text(rep: dict) -> str:
    head = f"{rep.get('kind')}"
    if rep.get("name"):
        head += f" {rep['name']}"
    lines = [f"{head}: {'PASS' if rep.get('passed') else 'FAIL'}"]
    for k, v in rep.items():
        if k in ("kind", "name", "passed", "witnesses"):
            continue
        if isinstance(v, dict) and v and all(not isinstance(x, (dict, list)) for x in v.values()) and len(v) <= 12:
            lines.append(f"  {k}:")
            lines += [f"    {a} = {b}" for a, b in v.items()]
        else:
            lines.append(f"  {k}: {json.dumps(v, ensure_ascii=False) if not isinstance(v, str) else v}")
    for w in rep.get("witnesses", []):
        lines.append(f"  witness: {json.dumps(w, ensure_ascii=False)}")
    return "\n".join(lines)
