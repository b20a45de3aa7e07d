"""Hypothesis strategies for finite sets, functions, systems and kernels."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from impcat.finsys import FinSet, TotalFn, autonomous_system, make_system
from impcat.kernelcat import RelKernel, StochKernel


def finsets(min_size: int = 1, max_size: int = 6, prefix: str = "a"):
    return st.integers(min_size, max_size).map(lambda n: FinSet(prefix.upper(), [f"{prefix}{k}" for k in range(n)]))


@st.composite
def total_fns(draw, dom: FinSet, cod: FinSet):
    return TotalFn(dom, cod, {x: draw(st.sampled_from(cod.elements)) for x in dom}, "f")


@st.composite
def rel_kernels(draw, dom: FinSet, cod: FinSet):
    rows = {}
    for x in dom:
        rows[x] = draw(st.sets(st.sampled_from(cod.elements), min_size=1))
    return RelKernel(dom, cod, rows, "r")


@st.composite
def stoch_kernels(draw, dom: FinSet, cod: FinSet, allow_zeros: bool = True):
    rows = {}
    lo = 0 if allow_zeros else 1
    for x in dom:
        ws = draw(st.lists(st.integers(lo, 4), min_size=len(cod), max_size=len(cod)))
        if not any(ws):
            ws[draw(st.integers(0, len(cod) - 1))] = 1
        total = sum(ws)
        rows[x] = {y: Fraction(w, total) for y, w in zip(cod, ws) if w}
    return StochKernel(dom, cod, rows, "s")


def kernels(flavor: str, dom: FinSet, cod: FinSet):
    return rel_kernels(dom, cod) if flavor == "rel" else stoch_kernels(dom, cod)


@st.composite
def autonomous_systems(draw, max_size: int = 6, prefix: str = "s"):
    X = draw(finsets(1, max_size, prefix))
    nxt = {x: draw(st.sampled_from(X.elements)) for x in X}
    return autonomous_system(X, nxt, prefix.upper())


@st.composite
def input_systems(draw, max_states: int = 5, max_inputs: int = 3):
    X = draw(finsets(1, max_states, "x"))
    I = draw(finsets(1, max_inputs, "i"))
    table = {(x, i): draw(st.sampled_from(X.elements)) for x in X for i in I}
    return make_system(X, I, table, "Sys")
