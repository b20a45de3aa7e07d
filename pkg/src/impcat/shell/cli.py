"""Command-line entry point.

Exit codes: 0 all checks passed, 1 a check failed, 2 parse or validation
error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import InvariantViolation, SpecError
from ..finsys import check_model
from ..impkit import run_pipeline
from ..interp import check_interpretation, derive_interpretation, imp_interpretations, model_chain
from ..kernelcat import eval_expr
from . import report as R
from .exprs import parse_kernel_expr
from .generate import GenConfig, generate_model_instance
from .spec_format import ParseError, SpecDocument, parse_spec, print_spec

EXIT_OK, EXIT_FAIL, EXIT_SPEC, EXIT_INTERNAL = 0, 1, 2, 3


def load(path: str) -> SpecDocument:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError("reference", f"cannot read {path}: {exc.strerror}") from None
    return parse_spec(text)


def _ident(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", label.replace("*", "star")) or "S"


def reasoner_document(reasoners) -> SpecDocument:
    doc = SpecDocument()
    for r in reasoners:
        for s in (r.hidden, r.params):
            if not any(t == s for t in doc.sets.values()):
                name = _ident(s.label)
                doc.sets[name if name not in doc.sets else f"{name}_{r.name}"] = s
        doc.functions[f"c_{r.name}"] = r.update
        doc.kernels[f"psi_{r.name}"] = r.interpretation
        doc.kernels[f"kappa_{r.name}"] = r.model
        doc.reasoners[r.name] = r
    return doc


def model_document(X, M, mu) -> SpecDocument:
    doc = SpecDocument()
    doc.sets = {"X": X.states, "M": M.states}
    doc.systems = {"X": X, "M": M}
    doc.maps = {"mu": mu}
    return doc


# --- commands -------------------------------------------------------------------------


def cmd_check(a) -> list[dict]:
    doc = load(a.file)
    if a.what == "system":
        return [R.system_report(a.name, doc.get("systems", a.name))]
    m = doc.get("maps", a.name)
    return [R.map_report(a.name, m) if a.what == "map" else R.model_report(a.name, m)]


def cmd_imp(a) -> list[dict]:
    doc = load(a.file)
    return [R.pipeline_report(run_pipeline(doc.get("problems", a.problem)))]


def cmd_interp_derive(a) -> list[dict]:
    doc = load(a.file)
    if a.problem:
        pipe = run_pipeline(doc.get("problems", a.problem))
        if pipe.model_full is None:
            rep = R.pipeline_report(pipe)
            rep["kind"] = "interp_derive"
            return [rep]
        reasoners = [r for r in imp_interpretations(pipe) if r is not None]
    else:
        mu = doc.get("maps", a.map)
        if not check_model(mu):
            return [R.model_report(a.map, mu)]
        reasoners = [derive_interpretation(mu, f"reasoner_{a.map}")]
    reports = [R.reasoner_report(r, check_interpretation(r)) for r in reasoners]
    if a.emit:
        Path(a.emit).write_text(print_spec(reasoner_document(reasoners), ascii=a.ascii), encoding="utf-8")
    return reports


def cmd_interp_check(a) -> list[dict]:
    doc = load(a.file)
    r = doc.get("reasoners", a.reasoner)
    return [R.reasoner_report(r, check_interpretation(r))]


def cmd_kernel(a) -> list[dict]:
    doc = load(a.file)
    e = parse_kernel_expr(a.expr)
    k = eval_expr(e, a.flavor, sets=doc.sets, functions={**{n: m.on_states for n, m in doc.maps.items()},
                                                            **doc.functions}, kernels=doc.kernels)
    return [R.kernel_report(a.expr, k)]


def cmd_gen_model(a) -> list[dict]:
    cfg = GenConfig(a.seed, a.states_m, a.max_fibre)
    X, M, mu = generate_model_instance(cfg)
    text = print_spec(model_document(X, M, mu))
    rep = {"kind": "gen", "seed": a.seed, "model_states": len(M.states), "states": len(X.states)}
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
        rep["out"] = a.out
    else:
        rep["document"] = text
    return [R.finish(rep, True, [])]


def sweep_one(args: tuple[int, int, int]) -> dict:
    seed, k, f = args
    _, _, mu = generate_model_instance(GenConfig(seed, k, f))
    return {"seed": seed, **model_chain(mu)}


def cmd_gen_sweep(a) -> list[dict]:
    jobs = [(s, a.states_m, a.max_fibre) for s in range(a.start, a.start + a.seeds)]
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as pool:
            rows = list(pool.map(sweep_one, jobs, chunksize=max(1, len(jobs) // (4 * a.jobs))))
    else:
        rows = [sweep_one(j) for j in jobs]
    rows.sort(key=lambda r: r["seed"])
    bad = [r for r in rows if not all(v for k, v in r.items() if k != "seed")]
    rep = {"kind": "sweep", "seeds": len(rows), "start": a.start, "failed": len(bad)}
    return [R.finish(rep, not bad, bad)]


# --- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for seed sweeps")

    p = argparse.ArgumentParser(prog="impcat", description="Check finite systems, models and their interpretations.",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    ck = sub.add_parser("check", parents=[common], help="check a system, map or model")
    ck.add_argument("what", choices=("system", "map", "model"))
    ck.add_argument("file")
    ck.add_argument("--name", "--map", dest="name", required=True)
    ck.set_defaults(run=cmd_check)

    imp = sub.add_parser("imp", parents=[common], help="run the regulation pipeline")
    imp_sub = imp.add_subparsers(dest="action", required=True)
    v = imp_sub.add_parser("verify", parents=[common])
    v.add_argument("file")
    v.add_argument("--problem", required=True)
    v.set_defaults(run=cmd_imp)

    ip = sub.add_parser("interp", parents=[common], help="derive or check filtering interpretations")
    ip_sub = ip.add_subparsers(dest="action", required=True)
    d = ip_sub.add_parser("derive", parents=[common])
    d.add_argument("file")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--map")
    src.add_argument("--problem")
    d.add_argument("--emit")
    d.add_argument("--unicode", dest="ascii", action="store_false", help="emit glyphs instead of ASCII aliases")
    d.set_defaults(run=cmd_interp_derive)
    c = ip_sub.add_parser("check", parents=[common])
    c.add_argument("file")
    c.add_argument("--reasoner", required=True)
    c.set_defaults(run=cmd_interp_check)

    kp = sub.add_parser("kernel", parents=[common], help="evaluate kernel expressions")
    kp_sub = kp.add_subparsers(dest="action", required=True)
    ev = kp_sub.add_parser("eval", parents=[common])
    ev.add_argument("file")
    ev.add_argument("--expr", required=True)
    ev.add_argument("--flavor", choices=("rel", "stoch"), default="rel")
    ev.set_defaults(run=cmd_kernel)

    gp = sub.add_parser("gen", parents=[common], help="seeded random models")
    gp_sub = gp.add_subparsers(dest="action", required=True)
    gm = gp_sub.add_parser("model", parents=[common])
    gm.add_argument("--seed", type=int, required=True)
    gm.add_argument("--states-m", type=int, default=2)
    gm.add_argument("--max-fibre", type=int, default=2)
    gm.add_argument("--out")
    gm.set_defaults(run=cmd_gen_model)
    sw = gp_sub.add_parser("sweep", parents=[common], help="run the model chain over consecutive seeds")
    sw.add_argument("--seeds", type=int, default=200)
    sw.add_argument("--start", type=int, default=0)
    sw.add_argument("--states-m", type=int, default=4)
    sw.add_argument("--max-fibre", type=int, default=3)
    sw.set_defaults(run=cmd_gen_sweep)
    return p


def run_command(argv: list[str] | None = None, out=None) -> tuple[int, list[dict]]:
    out = out or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_SPEC), []
    try:
        reports = a.run(a)
        code = EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAIL
    except ParseError as exc:
        reports, code = [R.error_report(exc.kind, str(exc))], EXIT_SPEC
    except SpecError as exc:
        reports, code = [R.error_report("validation", str(exc))], EXIT_SPEC
    except InvariantViolation as exc:
        reports, code = [R.error_report("invariant", str(exc))], EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - anything else is our bug
        reports, code = [R.error_report("internal", f"{type(exc).__name__}: {exc}")], EXIT_INTERNAL
    if a.format == "json":
        print(R.to_json(reports[0] if len(reports) == 1 else reports), file=out)
    else:
        print("\n".join(R.to_text(r) for r in reports), file=out)
    return code, reports


def main(argv: list[str] | None = None) -> int:
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
