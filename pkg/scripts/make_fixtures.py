"""Regenerate the bundled .sys fixtures from the Python builders."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from impcat import fixtures as fx
from impcat.finsys import FinSet
from impcat.finsys import TotalFn
from impcat.impkit import run_pipeline
from impcat.interp import Reasoner, derive_interpretation, imp_interpretations
from impcat.kernelcat import StochKernel
from impcat.shell.cli import reasoner_document
from impcat.shell.spec_format import SpecDocument, print_spec

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def map_doc(mu) -> SpecDocument:
    doc = SpecDocument()
    doc.sets = {"X": mu.source.states, "M": mu.target.states}
    doc.systems = {mu.source.name: mu.source, mu.target.name: mu.target}
    doc.maps = {"mu": mu}
    return doc


def problem_doc(prob) -> SpecDocument:
    doc = SpecDocument()
    for s in (prob.env, prob.plant, prob.controller):
        for f in s.states.factors or (s.states,):
            doc.sets.setdefault(f.label, f)
        doc.sets.setdefault(s.states.label, s.states)
    doc.systems = {s.name: s for s in (prob.env, prob.plant, prob.controller)}
    doc.problems = {prob.name: prob}
    return doc


def bayes_doc() -> SpecDocument:
    B = FinSet("B", ["0", "1"])
    doc = SpecDocument()
    doc.sets = {"B": B}
    q = Fraction(1, 4)
    doc.kernels = {
        "prior": StochKernel(fx.UNIT, B, {"*": {"0": Fraction(1, 3), "1": Fraction(2, 3)}}, "prior"),
        "flip": StochKernel(B, B, {"0": {"0": 1 - q, "1": q}, "1": {"0": q, "1": 1 - q}}, "flip"),
    }
    return doc


def stale_reasoner() -> Reasoner:
    """E1's reasoner with the parameter update frozen: fails the consistency equation."""
    r = derive_interpretation(fx.e1(), "stale")
    c = TotalFn(r.update.dom, r.update.cod, {k: k[-1] for k in r.update.dom}, "c_stale")
    return Reasoner(r.params, r.observations, r.hidden, c, r.interpretation, r.model, "stale")


def main():
    OUT.mkdir(exist_ok=True)
    docs = {
        "e1.sys": map_doc(fx.e1()),
        "e1_broken.sys": map_doc(fx.e1_broken()),
        "e2.sys": problem_doc(fx.e2()),
        "e2_nonaut.sys": problem_doc(fx.e2_nonautonomous_controller()),
        "doubled.sys": problem_doc(fx.doubled_controller()),
        "defect.sys": problem_doc(fx.closure_defect_problem()),
        "point.sys": problem_doc(fx.single_point_problem()),
        "flip.sys": bayes_doc(),
        "e1_reasoner.sys": reasoner_document([derive_interpretation(fx.e1(), "reasoner_mu")]),
        "e2_reasoners.sys": reasoner_document(imp_interpretations(run_pipeline(fx.e2()))),
        "stale_reasoner.sys": reasoner_document([stale_reasoner()]),
    }
    for name, doc in docs.items():
        (OUT / name).write_text(print_spec(doc), encoding="utf-8")
        print(f"wrote {OUT / name}")


if __name__ == "__main__":
    main()
