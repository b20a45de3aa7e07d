"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the bare report, or
under pytest, where the lines are repeated in the terminal summary.
"""

from __future__ import annotations

import io
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
from oracles import BOT, e2_brute, posterior  # noqa: E402

from impcat.finsys import UNIT, UNIT_ELEMENT, FinSet, check_model, product  # noqa: E402
from impcat.fixtures import e1, e1_broken, e2, e2_nonautonomous_controller  # noqa: E402
from impcat.impkit import run_pipeline  # noqa: E402
from impcat.interp import (  # noqa: E402
    check_indexed_model, check_interpretation, derive_interpretation, diamond_update, imp_interpretations,
)
from impcat.kernelcat import (  # noqa: E402
    RelKernel, StochKernel, bayes_invert_stoch, check_bayes_inverse, check_positivity_instance, distribution,
    zero_evidence_rows,
)
from impcat.shell.cli import run_command  # noqa: E402
from impcat.shell.generate import GenConfig, generate_model_instance  # noqa: E402
from impcat.shell.spec_format import parse_spec, print_spec, signature  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
RESULTS: list[str] = []


def record(n: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def cli(*argv):
    buf = io.StringIO()
    code, _ = run_command(list(argv) + ["--format", "json"], out=buf)
    return code, json.loads(buf.getvalue())


# --- 1 -----------------------------------------------------------------------------


def test_model_chain_suite():
    t0 = time.perf_counter()
    bad = []
    for seed in range(200):
        _, _, mu = generate_model_instance(GenConfig(seed, model_states=seed % 4 + 1, max_fibre=3))
        ok = bool(check_model(mu)) and check_indexed_model(mu).holds and derive_interpretation(mu).consistency().holds
        if not ok:
            bad.append(seed)
    dt = time.perf_counter() - t0
    record(1, "model chain on 200 generated models", not bad and dt < 5.0,
           f"failures={bad[:5]}, {dt:.2f}s of 5s")


# --- 2 -----------------------------------------------------------------------------


def test_e1_values():
    mu = e1()
    fib = {m: set(xs) for m, xs in mu.on_states.fibres().items()}
    d = diamond_update(mu.source, mu.on_states)
    chk = derive_interpretation(mu).consistency()
    both = frozenset((x, y) for x in ("x1", "x3") for y in ("x0", "x2"))
    ok = (fib == {"m0": {"x0", "x2"}, "m1": {"x1", "x3"}}
          and d.rows["x0"] == frozenset({"x1", "x3"})
          and chk.lhs.rows["m0"] == both and chk.rhs.rows["m0"] == both)
    record(2, "E1 fibres, diamond update and consistency sides at m0", ok)


# --- 3 -----------------------------------------------------------------------------


def test_e2_pipeline():
    t0 = time.perf_counter()
    rep = run_pipeline(e2())
    r_full, r_env = imp_interpretations(rep)
    chk_full, chk_env = check_interpretation(r_full), check_interpretation(r_env)
    dt = time.perf_counter() - t0
    brute = e2_brute()
    nu = rep.model_env
    ok = (all(rep.assumptions.values())
          and len(rep.s_star.subset) == 3
          and set(rep.s_star.subset) == brute["recurrent"] and brute["tracks"]
          and brute["n_states"] == 108 and rep.attractor.horizon == brute["worst"] <= 4
          and dict(rep.c_aut.update.table) == {"0": "1", "1": "2", "2": "0"}
          and nu is not None and dict(nu.on_states.table) == {e: str((int(e) + 1) % 3) for e in "012"}
          and bool(check_model(nu))
          and all(c.passed and c.beliefs_disjoint and c.observations_ignored for c in (chk_full, chk_env))
          and dt < 1.0)
    record(3, "E2 pipeline against 108-state brute force", ok,
           f"|S*|={len(rep.s_star.subset)}, horizon={rep.attractor.horizon}, brute worst={brute['worst']}, "
           f"{dt:.3f}s of 1s")


# --- 4 -----------------------------------------------------------------------------


def test_negative_controls():
    broken = check_model(e1_broken())
    code, rep = cli("check", "model", str(FIXTURES / "e1_broken.sys"), "--map", "mu")
    nonaut = run_pipeline(e2_nonautonomous_controller())
    wit = nonaut.autonomous.counterexample if nonaut.autonomous is not None else None
    C = nonaut.full.controller
    ok = (not broken and broken.counterexamples and code == 1 and rep["witnesses"]
          and wit is not None and len(wit) == 3 and C.step(wit[0], wit[1]) != C.step(wit[0], wit[2])
          and nonaut.model_full is None and nonaut.model_env is None
          and not nonaut.controller_model_ok and not nonaut.env_model_ok)
    record(4, "negative controls (perturbed E1, non-autonomous controller)", ok, f"witness={wit}")


# --- 5 -----------------------------------------------------------------------------


def _random_stoch(rng, dom, cod, zero_p):
    rows = {}
    for x in dom:
        ws = [0 if rng.random() < zero_p else rng.randint(1, 5) for _ in cod]
        if not any(ws):
            ws[rng.randrange(len(cod))] = 1
        rows[x] = {y: Fraction(w, sum(ws)) for y, w in zip(cod, ws) if w}
    return StochKernel(dom, cod, rows)


def test_finstoch_exactness():
    B = FinSet("B", ["0", "1"])
    q = Fraction(1, 4)
    flip = StochKernel(B, B, {"0": {"0": 1 - q, "1": q}, "1": {"0": q, "1": 1 - q}})
    prior = distribution(B, [Fraction(1, 3), Fraction(2, 3)])
    post = bayes_invert_stoch(flip, prior)
    first = post.prob("0", "0") == Fraction(3, 5)

    rng = random.Random(20261019)
    failures, zero_cases = 0, 0
    for _ in range(100):
        X = FinSet("X", [f"x{k}" for k in range(rng.randint(1, 4))])
        Y = FinSet("Y", [f"y{k}" for k in range(rng.randint(1, 4))])
        f = _random_stoch(rng, X, Y, 0.5)
        p = _random_stoch(rng, UNIT, X, 0.4)
        fdag = bayes_invert_stoch(f, p)
        dead = zero_evidence_rows(f, p)
        zero_cases += bool(dead)
        ok = check_bayes_inverse(f, p, fdag).holds
        for y in Y:
            want = ({x: Fraction(1, len(X)) for x in X} if y in dead else
                    {x: v for x, v in posterior(p.rows[UNIT_ELEMENT], f.rows, y).items() if v})
            ok &= fdag.rows[y] == want
        failures += not ok
    record(5, "exact posterior 3/5 and 100 random Bayes pairs", first and not failures and zero_cases > 0,
           f"posterior={post.prob('0', '0')}, failures={failures}, zero-evidence pairs={zero_cases}")


# --- 6 -----------------------------------------------------------------------------


def _random_kernel(rng, cls, dom, cod):
    if cls is RelKernel:
        return RelKernel(dom, cod, {x: {y for y in cod if rng.random() < 0.4} or {rng.choice(cod.elements)}
                                    for x in dom})
    return _random_stoch(rng, dom, cod, 0.3)


def _set(rng, p, lo=1, hi=6):
    return FinSet(p.upper(), [f"{p}{k}" for k in range(rng.randint(lo, hi))])


def _laws(rng, cls) -> list[str]:
    broken = []
    A, B = _set(rng, "a"), _set(rng, "b")
    f = _random_kernel(rng, cls, A, B)
    cp, dl, i = cls.copy(A), cls.delete(A), cls.identity(A)
    if not (cp >> (dl @ i) == i == cp >> (i @ dl)):
        broken.append("counit")
    if not (cp >> (cp @ i) == cp >> (i @ cp)):
        broken.append("coassociativity")
    if not (cp >> cls.swap(A, A) == cp):
        broken.append("cocommutativity")
    if f >> cls.delete(B) != cls.delete(A):
        broken.append("delete naturality")
    if f.is_deterministic() != f.is_deterministic_by_naturality():
        broken.append("determinism")
    if len(A) * len(B) <= 36 and cls.swap(A, B) >> cls.swap(B, A) != cls.identity(product(A, B)):
        broken.append("swap involution")
    C, D = _set(rng, "c", 1, 3), _set(rng, "d", 1, 3)
    A3, B3 = _set(rng, "p", 1, 3), _set(rng, "q", 1, 3)
    g, h, k, m = (_random_kernel(rng, cls, s, t) for s, t in ((A3, B3), (B3, C), (C, D), (D, A3)))
    if (g @ k) >> (h @ m) != (g >> h) @ (k >> m):
        broken.append("interchange")
    return broken


def test_categorical_laws():
    t0 = time.perf_counter()
    rng = random.Random(6)
    broken = {"rel": [], "stoch": []}
    deterministic_seen = {"rel": 0, "stoch": 0}
    for flavor, cls in (("rel", RelKernel), ("stoch", StochKernel)):
        for _ in range(100):
            broken[flavor] += _laws(rng, cls)
        for _ in range(100):
            A, B = _set(rng, "a", 1, 4), _set(rng, "b", 1, 4)
            table = {x: rng.choice(B.elements) for x in A}
            det = cls(A, B, {x: ({table[x]} if cls is RelKernel else {table[x]: 1}) for x in A})
            deterministic_seen[flavor] += det.is_deterministic() and det.is_deterministic_by_naturality()
    pos_ok, pos_n, tries = True, 0, 0
    while pos_n < 100 and tries < 20000:
        tries += 1
        A, B, C = _set(rng, "a", 1, 4), _set(rng, "b", 1, 4), _set(rng, "c", 1, 3)
        f, g = _random_kernel(rng, RelKernel, A, B), _random_kernel(rng, RelKernel, B, C)
        if not (f >> g).is_deterministic():
            continue
        chk = check_positivity_instance(f, g)
        pos_ok &= chk.holds and not chk.vacuous
        pos_n += 1
    dt = time.perf_counter() - t0
    ok = (not broken["rel"] and not broken["stoch"] and pos_ok and pos_n == 100
          and deterministic_seen == {"rel": 100, "stoch": 100} and dt < 10.0)
    record(6, "categorical laws (100 kernels per flavor) and 100 positivity instances", ok,
           f"broken={broken}, positivity={pos_n}, {dt:.2f}s of 10s")


# --- 7 -----------------------------------------------------------------------------


def test_parser_and_exit_codes(tmp_path):
    files = sorted(FIXTURES.glob("*.sys"))
    rt = all(
        signature(parse_spec(print_spec(parse_spec(f.read_text(encoding="utf-8")))))
        == signature(parse_spec(f.read_text(encoding="utf-8"))) for f in files)
    bad = tmp_path / "bad.sys"
    bad.write_text("set X = {x0, x1}\nsystem S { states X inputs 1 update { x0 -> x1 } }\n", encoding="utf-8")
    codes = {
        "pass": cli("check", "model", str(FIXTURES / "e1.sys"), "--map", "mu")[0],
        "fail": cli("check", "model", str(FIXTURES / "e1_broken.sys"), "--map", "mu")[0],
        "validation": cli("check", "system", str(bad), "--name", "S")[0],
        "syntax": cli("kernel", "eval", str(FIXTURES / "e1.sys"), "--expr", "fn mu ⊗")[0],
        "imp": cli("imp", "verify", str(FIXTURES / "e2.sys"), "--problem", "tracking")[0],
    }
    import impcat.shell.cli as c
    from impcat.errors import InvariantViolation

    real = c.run_pipeline

    def boom(prob):
        raise InvariantViolation("simulated internal failure")
    c.run_pipeline = boom
    try:
        codes["internal"] = cli("imp", "verify", str(FIXTURES / "e2.sys"), "--problem", "tracking")[0]
    finally:
        c.run_pipeline = real
    want = {"pass": 0, "fail": 1, "validation": 2, "syntax": 2, "imp": 0, "internal": 3}
    record(7, f"round trip on {len(files)} fixtures and exit classes 0/1/2/3", rt and codes == want and len(files) > 0,
           f"codes={codes}")


if __name__ == "__main__":
    import tempfile
    tests = [test_model_chain_suite, test_e1_values, test_e2_pipeline, test_negative_controls,
             test_finstoch_exactness, test_categorical_laws]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    with tempfile.TemporaryDirectory() as d:
        try:
            test_parser_and_exit_codes(Path(d))
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
