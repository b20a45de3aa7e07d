import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from impcat.errors import InvariantViolation, SpecError
from impcat.kernelcat import Copy, Del, FromFn, Id, Named, Par, Preimage, Seq, Swap, render
from impcat.shell.cli import run_command
from impcat.shell.exprs import parse_kernel_expr
from impcat.shell.generate import GenConfig, generate_model_instance
from impcat.shell.spec_format import ParseError, parse_spec, print_spec, signature

CLOCK2 = """
set M = {m0, m1}
system Clock2 { states M inputs 1 update { m0 -> m1  m1 -> m0 } }
"""


def cli(*argv):
    buf = io.StringIO()
    code, reports = run_command(list(argv) + ["--format", "json"], out=buf)
    return code, reports, json.loads(buf.getvalue())


class TestParser:
    def test_minimal(self):
        doc = parse_spec(CLOCK2)
        assert list(doc.systems) == ["Clock2"] and doc.systems["Clock2"].autonomous

    def test_missing_state_in_update(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("set M = {m0, m1}\nsystem S { states M inputs 1 update { m0 -> m1 } }")
        assert ei.value.kind == "validation" and "m1" in str(ei.value)

    def test_lexical(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("set M = {m0, m1} $")
        assert ei.value.kind == "lexical" and (ei.value.line, ei.value.col) == (1, 18)

    def test_syntax_reports_position(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("set M = {m0, m1}\nsystem S { states M inputs }")
        e = ei.value
        assert e.kind == "syntax" and e.line == 2 and "expected" in str(e)

    def test_reference(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("system S { states Nope inputs 1 update { } }")
        assert ei.value.kind == "reference"

    def test_duplicate(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("set A = {a}\nset A = {b}")
        assert ei.value.kind == "validation"

    def test_ascii_aliases(self):
        doc = parse_spec("set S = {_|_, a}\nset P = S × S")
        assert "⊥" in doc.sets["S"] and ("⊥", "a") in doc.sets["P"]

    def test_stoch_kernel(self):
        doc = parse_spec("set B = {0, 1}\nkernel k : B ~> B stoch { 0 -> {0: 3/4, 1: 1/4} 1 -> {1: 1} }")
        assert str(doc.kernels["k"].rows["0"]["0"]) == "3/4"

    def test_bad_weights(self):
        with pytest.raises(ParseError) as ei:
            parse_spec("set B = {0, 1}\nkernel k : B ~> B stoch { 0 -> {0: 1/2} 1 -> {1: 1} }")
        assert ei.value.kind == "validation"

    def test_tuple_set_literal(self):
        doc = parse_spec("set T = {(a, b), (a, c)}\nset U = T * T")
        assert len(doc.sets["U"]) == 4 and doc.sets["U"].arity == 4


class TestRoundTrip:
    def test_fixtures(self, fixture_dir):
        files = sorted(fixture_dir.glob("*.sys"))
        assert len(files) >= 8
        for f in files:
            text = f.read_text(encoding="utf-8")
            doc = parse_spec(text)
            again = parse_spec(print_spec(doc))
            assert signature(doc) == signature(again), f.name
            assert print_spec(again) == text, f.name

    def test_unicode_printing(self, fixture_dir):
        doc = parse_spec((fixture_dir / "e2.sys").read_text(encoding="utf-8"))
        text = print_spec(doc, ascii=False)
        assert "⊥" in text and signature(parse_spec(text)) == signature(doc)

    @given(st.integers(0, 2 ** 64 - 1), st.integers(1, 4), st.integers(1, 3))
    def test_generated_documents(self, seed, k, f):
        from impcat.shell.cli import model_document
        doc = model_document(*generate_model_instance(GenConfig(seed, k, f)))
        assert signature(parse_spec(print_spec(doc))) == signature(doc)


class TestExprs:
    def test_example(self):
        assert parse_kernel_expr("copy[X] ; (del[X] ⊗ id[X])") == Seq(Copy("X"), Par(Del("X"), Id("X")))

    def test_ascii_tensor_and_precedence(self):
        assert parse_kernel_expr("a ; b (x) c") == Seq(Named("a"), Par(Named("b"), Named("c")))

    def test_fn_pre_swap(self):
        e = parse_kernel_expr("pre mu ; fn mu ; swap[A*B, C]")
        assert e == Seq(Seq(Preimage("mu"), FromFn("mu")), Swap("A*B", "C"))

    def test_dangling_tensor(self):
        with pytest.raises(ParseError, match="end of input"):
            parse_kernel_expr("fn mu ⊗")

    def test_unbalanced(self):
        with pytest.raises(ParseError):
            parse_kernel_expr("(id[X] ; id[X]")

    @given(st.recursive(
        st.sampled_from([Id("X"), Copy("X"), Del("X"), Swap("X", "Y"), Named("k"), FromFn("f"), Preimage("f")]),
        lambda sub: st.one_of(st.builds(Seq, sub, sub), st.builds(Par, sub, sub)), max_leaves=8))
    def test_render_parse(self, e):
        def norm(t):
            # both operators are associative, so compare flattened shapes
            if isinstance(t, (Seq, Par)):
                kind = type(t)
                out = []
                for side in (t.left, t.right):
                    n = norm(side)
                    out += n[1] if isinstance(n, tuple) and n[0] is kind else [n]
                return (kind, out)
            return t
        for ascii in (True, False):
            assert norm(parse_kernel_expr(render(e, ascii=ascii))) == norm(e)


class TestGenerator:
    def test_deterministic(self):
        cfg = GenConfig(1, 2, 2)
        a = print_spec(__import__("impcat.shell.cli", fromlist=["x"]).model_document(*generate_model_instance(cfg)))
        b = print_spec(__import__("impcat.shell.cli", fromlist=["x"]).model_document(*generate_model_instance(cfg)))
        assert a == b

    def test_seed_one(self):
        X, M, mu = generate_model_instance(GenConfig(1, 2, 2))
        assert len(M.states) == 2 and len(X.states) <= 4

    def test_bad_config(self):
        for kw in ({"model_states": 0}, {"max_fibre": 0}, {"input_size": 2}, {"seed": -1}):
            with pytest.raises(SpecError):
                GenConfig(**kw)


class TestCli:
    def test_check_model_pass(self, fixture_dir):
        code, _, rep = cli("check", "model", str(fixture_dir / "e1.sys"), "--map", "mu")
        assert code == 0 and rep["passed"] and rep["witnesses"] == []

    def test_check_model_fail(self, fixture_dir):
        code, _, rep = cli("check", "model", str(fixture_dir / "e1_broken.sys"), "--name", "mu")
        assert code == 1 and rep["witnesses"][0][0] == "square"

    def test_check_system_and_map(self, fixture_dir):
        assert cli("check", "system", str(fixture_dir / "e1.sys"), "--name", "Clock4")[0] == 0
        assert cli("check", "map", str(fixture_dir / "e1.sys"), "--name", "mu")[0] == 0
        assert cli("check", "map", str(fixture_dir / "e1_broken.sys"), "--name", "mu")[0] == 1

    def test_imp_verify(self, fixture_dir):
        code, _, rep = cli("imp", "verify", str(fixture_dir / "e2.sys"), "--problem", "tracking")
        assert code == 0
        assert all(rep["assumptions"].values()) and rep["s_star_size"] == 3 and rep["horizon"] <= 4

    def test_imp_verify_nonaut(self, fixture_dir):
        code, _, rep = cli("imp", "verify", str(fixture_dir / "e2_nonaut.sys"), "--problem", "tracking_nonaut")
        assert code == 1 and rep["model_full"] is None and rep["model_env"] is None
        assert rep["witnesses"][0][0] == "controller_reads_plant"

    def test_interp_round_trip(self, fixture_dir, tmp_path):
        out = tmp_path / "r.sys"
        code, reps, _ = cli("interp", "derive", str(fixture_dir / "e1.sys"), "--map", "mu", "--emit", str(out))
        assert code == 0 and reps[0]["consistency"]
        assert cli("interp", "check", str(out), "--reasoner", "reasoner_mu")[0] == 0

    def test_interp_derive_problem(self, fixture_dir):
        code, reps, rep = cli("interp", "derive", str(fixture_dir / "e2.sys"), "--problem", "tracking")
        assert code == 0 and [r["name"] for r in reps] == ["reasoner_full", "reasoner_env"]

    def test_interp_derive_non_model(self, fixture_dir):
        code, reps, _ = cli("interp", "derive", str(fixture_dir / "e1_broken.sys"), "--map", "mu")
        assert code == 1 and reps[0]["kind"] == "model"

    def test_interp_check_stale(self, fixture_dir):
        code, _, rep = cli("interp", "check", str(fixture_dir / "stale_reasoner.sys"), "--reasoner", "stale")
        assert code == 1 and not rep["consistency"]

    def test_kernel_eval(self, fixture_dir):
        code, _, rep = cli("kernel", "eval", str(fixture_dir / "flip.sys"), "--expr", "prior ; flip",
                           "--flavor", "stoch")
        assert code == 0 and rep["rows"]["*"] == {"0": "5/12", "1": "7/12"}
        code, _, rep = cli("kernel", "eval", str(fixture_dir / "e1.sys"), "--expr", "fn mu ; pre mu")
        assert rep["rows"]["x0"] == ["x0", "x2"]

    def test_gen(self, tmp_path):
        out = tmp_path / "g.sys"
        assert cli("gen", "model", "--seed", "5", "--states-m", "3", "--max-fibre", "2", "--out", str(out))[0] == 0
        doc = parse_spec(out.read_text(encoding="utf-8"))
        assert cli("check", "model", str(out), "--map", "mu")[0] == 0
        assert len(doc.systems["M"].states) == 3

    def test_sweep_jobs_agree(self):
        a = cli("gen", "sweep", "--seeds", "20", "--jobs", "1")
        b = cli("gen", "sweep", "--seeds", "20", "--jobs", "2")
        assert a[0] == b[0] == 0 and a[2] == b[2]

    # exit-code classes
    def test_exit_2_parse(self, tmp_path):
        bad = tmp_path / "bad.sys"
        bad.write_text("set M = {m0, m1\n", encoding="utf-8")
        code, _, rep = cli("check", "system", str(bad), "--name", "M")
        assert code == 2 and rep["error"] == "syntax"

    def test_exit_2_expr(self, fixture_dir):
        code, _, rep = cli("kernel", "eval", str(fixture_dir / "e1.sys"), "--expr", "fn mu ⊗")
        assert code == 2 and "end of input" in rep["message"]

    def test_exit_2_reference(self, fixture_dir):
        code, _, rep = cli("check", "model", str(fixture_dir / "e1.sys"), "--map", "nu")
        assert code == 2 and rep["error"] == "reference"

    def test_exit_2_missing_file(self, tmp_path):
        assert cli("check", "model", str(tmp_path / "none.sys"), "--map", "mu")[0] == 2

    def test_exit_2_bad_flavor_use(self, fixture_dir):
        assert cli("kernel", "eval", str(fixture_dir / "e1.sys"), "--expr", "pre mu", "--flavor", "stoch")[0] == 2

    def test_exit_3_invariant(self, fixture_dir, monkeypatch):
        import impcat.shell.cli as c

        def boom(prob):
            raise InvariantViolation("simulated")
        monkeypatch.setattr(c, "run_pipeline", boom)
        code, _, rep = cli("imp", "verify", str(fixture_dir / "e2.sys"), "--problem", "tracking")
        assert code == 3 and rep["error"] == "invariant"

    def test_text_format(self, fixture_dir):
        buf = io.StringIO()
        code, _ = run_command(["check", "model", str(fixture_dir / "e1_broken.sys"), "--map", "mu"], out=buf)
        assert code == 1 and buf.getvalue().startswith("model mu: FAIL") and "witness:" in buf.getvalue()

    @given(st.integers(0, 2 ** 20), st.integers(1, 3), st.integers(1, 3))
    def test_passing_reports_have_no_witnesses(self, seed, k, f):
        from impcat.interp import check_interpretation, derive_interpretation
        from impcat.shell import report as R
        _, _, mu = generate_model_instance(GenConfig(seed, k, f))
        reps = [R.model_report("mu", mu), R.map_report("mu", mu)]
        r = derive_interpretation(mu)
        reps.append(R.reasoner_report(r, check_interpretation(r)))
        for rep in reps:
            assert rep["passed"] and rep["witnesses"] == []
