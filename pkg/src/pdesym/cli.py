"""Command-line front end: parse DSL inputs, run invariance/equivalence/
reduction checks, and emit deterministic text or JSON reports.

Exit codes: 0 all requested verdicts positive; 1 a negative verdict;
2 an inconclusive zero test; 3 and above usage or syntax errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import sympy as sp

from . import catalog
from .kernel import InconclusiveError, KernelError
from .fields import (
    Chart,
    OperatorFamily,
    equivalent_families,
    equivalent_mod_group,
    is_involutive,
)
from .invariance import Verdict, determining_system, lie_check, qcond_check
from .parser import Document, ParseError, parse_document, parse_expression, print_expression

__all__ = ["main", "RunConfig"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3


@dataclass
class RunConfig:
    command: str
    catalog_id: str | None = None
    input_path: str | None = None
    json_output: bool = False
    seed: int = 0
    verbose: bool = False


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 3
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if value is None or isinstance(value, (bool, int, str)):
        return value
    return str(value)


def _emit(payload, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
        return
    checks = payload["checks"] if isinstance(payload, dict) and "checks" in payload else [payload]
    for c in checks:
        print(f"{c['check']}: {c['verdict']}")
        for r in c.get("residuals", []):
            if str(r) != "0":
                print(f"  residual: {r}")
    for note in payload.get("cited_not_verified", []) if isinstance(payload, dict) else []:
        print(f"note: {note}")


def _verdict_exit(verdicts) -> int:
    verdicts = list(verdicts)
    if any(v == "fail" for v in verdicts):
        return EXIT_FAIL
    if any(v == "inconclusive" for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _report_to_check(check_id: str, rep) -> dict:
    verdict = {
        Verdict.INVARIANT: "pass",
        Verdict.NOT_INVARIANT: "fail",
        Verdict.INCONCLUSIVE: "inconclusive",
    }[rep.verdict]
    return {
        "check": check_id,
        "paper_ref": f"{rep.system}: invariance under {rep.family}",
        "verdict": verdict,
        "residuals": [str(r) for r in rep.residuals if r != 0] or ["0"],
        "witness": rep.witness,
    }


def _doc_for_space(space) -> Document:
    return Document(
        variables=space.independents, dependents=space.dependents, order=space.order
    )


def _load_document(path: str) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_document(fh.read())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _qcond_entry(entry_id: str) -> catalog.QcondEntry:
    entries = catalog.qcond_entries()
    for n in (2, 3):
        entries += [catalog.qtilde2(n, fam) for fam in catalog.PHI_FAMILY_IDS]
    for e in entries:
        if e.id == entry_id:
            return e
    raise KernelError(f"unknown conditional-operator id {entry_id!r}")


def _reduction_entry(entry_id: str) -> catalog.ReductionEntry:
    for e in catalog.reduction_entries():
        if e.id == entry_id:
            return e
    raise KernelError(f"unknown reduction id {entry_id!r}")


def _flow(flow_id: str) -> catalog.Flow:
    sys_id = flow_id.split(":flow=", 1)[0]
    for f in catalog.flows(sys_id):
        if f.id == flow_id:
            return f
    raise KernelError(f"unknown flow id {flow_id!r}")


def _collect_ops(args) -> tuple:
    """(system, ops, constraints, chart) from --catalog/--input/--op."""
    if args.input:
        doc = _load_document(args.input)
        system = doc.system(args.input)
        ops = list(doc.operators.values())
        if getattr(args, "op", None):
            if args.op in doc.operators:
                ops = [doc.operators[args.op]]
            else:
                ops = [_parse_op(args.op, doc)]
        return system, ops, doc.constraints(), doc.chart()
    if args.catalog:
        system = catalog.get_system(args.catalog)
        if getattr(args, "op", None):
            doc = _doc_for_space(system.space)
            return system, [_parse_op(args.op, doc)], None, Chart()
        gens = catalog.algebra(args.catalog)
        constraints = None
        if args.catalog.startswith("lhe:n="):
            n = int(args.catalog.split("=", 1)[1])
            source, constraints = catalog.lhe_source_term(n)
            gens = gens + [source]
        return system, gens, constraints, Chart()
    print("error: one of --catalog or --input is required", file=sys.stderr)
    sys.exit(EXIT_USAGE)


def _parse_op(text: str, doc: Document):
    expr = parse_expression(text, doc, allow_directions=True)
    parser = _OpBuilder(doc)
    return parser.build("Q", expr)


class _OpBuilder:
    def __init__(self, doc: Document):
        self.doc = doc

    def build(self, name, expr):
        from .parser import _Parser, tokenize

        helper = _Parser(tokenize(""), self.doc)
        return helper._to_field(name, expr)


def _seed(args) -> int:
    env = os.environ.get("SYMSEED")
    if env is not None:
        return int(env)
    return args.seed


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------

def _cmd_check_lie(args) -> int:
    system, ops, constraints, _chart = _collect_ops(args)
    seed = _seed(args)
    checks = []
    for q in ops:
        rep = lie_check(system, q, constraints, seed=seed)
        check = _report_to_check(f"lie:{system.name}:{q.name}", rep)
        check["seed"] = seed
        checks.append(check)
    _emit({"checks": checks, "seed": seed}, args.json)
    return _verdict_exit(c["verdict"] for c in checks)


def _cmd_check_qcond(args) -> int:
    seed = _seed(args)
    if args.catalog and not args.op:
        entry = _qcond_entry(args.catalog)
        rep = entry.check(seed=seed)
        check_id = f"qcond:{entry.id}"
        chart = entry.chart
    else:
        system, ops, constraints, chart = _collect_ops(args)
        rep = qcond_check(system, OperatorFamily(tuple(ops)), constraints, chart, seed=seed)
        check_id = f"qcond:{system.name}"
    check = _report_to_check(check_id, rep)
    check["seed"] = seed
    _emit({"checks": [check], "seed": seed}, args.json)
    return _verdict_exit([check["verdict"]])


def _cmd_involutive(args) -> int:
    seed = _seed(args)
    if args.catalog and not args.op:
        entry = _qcond_entry(args.catalog)
        family, constraints, chart = entry.family, entry.constraints, entry.chart
        name = entry.id
    else:
        system, ops, constraints, chart = _collect_ops(args)
        family, name = OperatorFamily(tuple(ops)), system.name
    ok, table = is_involutive(family, chart, constraints, seed=seed)
    check = {
        "check": f"involutive:{name}",
        "paper_ref": "closure of the family under commutators",
        "verdict": "pass" if ok else "fail",
        "residuals": [],
        "witness": table,
        "seed": seed,
    }
    _emit({"checks": [check], "seed": seed}, args.json)
    return EXIT_PASS if ok else EXIT_FAIL


def _named_family(args, which: str):
    names = getattr(args, which).split(",")
    if args.input:
        doc = _load_document(args.input)
        pool = dict(doc.operators)
        chart, constraints = doc.chart(), doc.constraints()
    else:
        pool = {g.name: g for g in catalog.algebra(args.catalog)}
        chart, constraints = Chart(), None
    try:
        ops = tuple(pool[n] for n in names)
    except KeyError as exc:
        raise KernelError(f"unknown operator name {exc.args[0]!r}")
    return OperatorFamily(ops, name=getattr(args, which)), chart, constraints


def _cmd_equiv(args) -> int:
    seed = _seed(args)
    fa, chart, constraints = _named_family(args, "family_a")
    fb, _, _ = _named_family(args, "family_b")
    ok = equivalent_families(fa, fb, chart, constraints, seed=seed)
    check = {
        "check": f"equiv:{fa.name}~{fb.name}",
        "paper_ref": "family equivalence over the function ring",
        "verdict": "pass" if ok else "fail",
        "residuals": [],
        "witness": None,
        "seed": seed,
    }
    _emit({"checks": [check], "seed": seed}, args.json)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_equiv_mod(args) -> int:
    seed = _seed(args)
    fa, chart, constraints = _named_family(args, "family_a")
    fb, _, _ = _named_family(args, "family_b")
    flow = _flow(args.flow)
    if args.eps is not None:
        flow = flow.at(sp.Rational(args.eps))
    if flow.chart_factors:
        chart = chart.with_(*flow.chart_factors)
    ok = equivalent_mod_group(fa, fb, flow.transformation, chart, constraints, seed=seed)
    check = {
        "check": f"equiv-mod:{fa.name}~Ad({flow.id}){fb.name}",
        "paper_ref": "family equivalence modulo a group transformation",
        "verdict": "pass" if ok else "fail",
        "residuals": [],
        "witness": None,
        "seed": seed,
    }
    _emit({"checks": [check], "seed": seed}, args.json)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_reduce(args) -> int:
    seed = _seed(args)
    entry = _reduction_entry(args.catalog)
    ok = entry.check(seed=seed)
    check = {
        "check": f"reduce:{entry.id}",
        "paper_ref": "ansatz substitution reproduces the stored reduced system",
        "verdict": "pass" if ok else "fail",
        "residuals": [str(e) for e in entry.expected],
        "witness": None,
        "seed": seed,
    }
    _emit({"checks": [check], "seed": seed}, args.json)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_determining(args) -> int:
    seed = _seed(args)
    doc = _load_document(args.input)
    system = doc.system(args.input)
    if args.op:
        if args.op not in doc.operators:
            raise KernelError(f"unknown operator name {args.op!r}")
        template = doc.operators[args.op]
    elif len(doc.operators) == 1:
        template = next(iter(doc.operators.values()))
    else:
        raise KernelError("--op is required when the file declares several operators")
    eqs = determining_system(system, template, args.mode, doc.chart())
    payload = {
        "check": f"determining:{system.name}:{template.name}",
        "paper_ref": "determining system for undetermined operator coefficients",
        "verdict": "pass",
        "residuals": [print_expression(e, doc) for e in eqs],
        "witness": None,
        "seed": seed,
    }
    _emit({"checks": [payload], "seed": seed}, args.json)
    return EXIT_PASS


def _cmd_paper_verify(args) -> int:
    seed = _seed(args)
    bundle = catalog.verify_paper(args.scope, seed=seed)
    _emit(bundle, args.json)
    return _verdict_exit(c["verdict"] for c in bundle["checks"])


def _cmd_parse_only(args) -> int:
    doc = _load_document(args.path)
    summary = {
        "check": f"parse:{args.path}",
        "paper_ref": "syntax check",
        "verdict": "pass",
        "residuals": [],
        "witness": {
            "vars": [v.name for v in doc.variables],
            "deps": list(doc.dependents),
            "order": doc.order,
            "equations": len(doc.equations),
            "constraints": len(doc.constraint_equations),
            "operators": sorted(doc.operators),
        },
        "seed": _seed(args),
    }
    _emit({"checks": [summary], "seed": _seed(args)}, args.json)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# Argument wiring.
# ---------------------------------------------------------------------------

def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="pdesym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, catalog_opt=True, input_opt=True, op_opt=False):
        if catalog_opt:
            p.add_argument("--catalog", help="catalog id (system or stored check)")
        if input_opt:
            p.add_argument("--input", help="path to a .sym DSL file")
        if op_opt:
            p.add_argument("--op", help="operator name (file) or DSL expression (catalog)")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--seed", type=int, default=0, help="randomized-guard seed")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("check-lie", help="classical invariance of operators")
    common(p, op_opt=True)
    p.set_defaults(func=_cmd_check_lie)

    p = sub.add_parser("check-qcond", help="conditional invariance of a family")
    common(p, op_opt=True)
    p.set_defaults(func=_cmd_check_qcond)

    p = sub.add_parser("involutive", help="commutator closure of a family")
    common(p, op_opt=True)
    p.set_defaults(func=_cmd_involutive)

    p = sub.add_parser("equiv", help="family equivalence over the function ring")
    common(p)
    p.add_argument("--family-a", required=True, help="comma-separated operator names")
    p.add_argument("--family-b", required=True, help="comma-separated operator names")
    p.set_defaults(func=_cmd_equiv)

    p = sub.add_parser("equiv-mod", help="family equivalence modulo a stored flow")
    common(p)
    p.add_argument("--family-a", required=True)
    p.add_argument("--family-b", required=True)
    p.add_argument("--flow", required=True, help="catalog flow id")
    p.add_argument("--eps", help="rational flow parameter (default: symbolic)")
    p.set_defaults(func=_cmd_equiv_mod)

    p = sub.add_parser("reduce", help="verify a stored ansatz reduction")
    common(p, input_opt=False)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("determining", help="determining system for a template operator")
    common(p, catalog_opt=False, op_opt=True)
    p.add_argument("--mode", choices=("lie", "qcond"), default="lie")
    p.set_defaults(func=_cmd_determining)

    p = sub.add_parser("paper-verify", help="run the stored verification bundle")
    p.add_argument("scope", choices=catalog.SCOPES)
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_paper_verify)

    p = sub.add_parser("parse-only", help="syntax-check a DSL file")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_parse_only)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except KernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
