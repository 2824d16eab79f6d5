"""Single executable front end; JSON on stdout, diagnostics on stderr.

Exit codes: 0 success / homomorphism found, 1 negative result (chain
failure, UNSAT, counterexamples), 2 input or budget error, 3 invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, SCHEMA_VERSION
from .algebra import load_algebra, save_algebra
from .errors import InputError, InvariantViolation, ResourceBudgetError
from .jonsson import preprocess_terms, verify_cd4
from .oracle import GenParams, brute_force_hom, lemma_suite, random_instance
from .reductions import solve
from .relstruct import load_structure, save_structure, validate_template
from .strategy import EMPTY, choose_k, enforce, init_full
from .report import render_lemmas, render_trace


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _cmd_check_jonsson(args) -> int:
    report = verify_cd4(load_algebra(args.algebra))
    _emit(report.to_json())
    return 0 if report.ok else 1


def _cmd_preprocess(args) -> int:
    result = preprocess_terms(load_algebra(args.algebra))
    save_algebra(result.algebra, args.output)
    _emit(
        {
            "n1": result.n1,
            "n3": result.n3,
            "l_exponents": list(result.l_exponents),
            "r_exponents": list(result.r_exponents),
            "changed": result.changed,
            "output": args.output,
        }
    )
    return 0


def _cmd_consistency(args) -> int:
    A = load_structure(args.instance)
    B = load_structure(args.template)
    k = args.k if args.k is not None else choose_k(A)
    if k < 1:
        raise InputError("k must be >= 1")
    H = enforce(init_full(A, B, k))
    if H is EMPTY:
        _emit({"k": k, "verdict": "UNSAT", "sizes": {}})
        return 1
    sizes = {",".join(map(str, I)): len(v) for I, v in sorted(H.table.items())}
    _emit({"k": k, "verdict": "SAT-UNKNOWN", "sizes": sizes})
    return 0


def _cmd_solve(args) -> int:
    A = load_structure(args.instance)
    B = load_structure(args.template)
    alg = load_algebra(args.algebra)
    assignment, trace = solve(A, B, alg, unchecked=args.unchecked)
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(trace.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if assignment is None:
        _emit({"verdict": "UNSAT"})
        return 1
    _emit({str(k): v for k, v in sorted(assignment.items())})
    return 0


def _cmd_lemmas(args) -> int:
    reports = lemma_suite(args.max_size, budget_sec=args.budget_sec)
    _emit([r.to_json() for r in reports])
    bad = sum(len(r.counterexamples) for r in reports)
    if bad:
        print(f"{bad} counterexample(s) found", file=sys.stderr)
    return 1 if bad else 0


def _cmd_gen(args) -> int:
    A, B, alg = random_instance(args.seed, GenParams())
    os.makedirs(args.out, exist_ok=True)
    paths = {
        "instance": os.path.join(args.out, "instance.json"),
        "template": os.path.join(args.out, "template.json"),
        "algebra": os.path.join(args.out, "algebra.json"),
    }
    save_structure(A, paths["instance"])
    save_structure(B, paths["template"])
    save_algebra(alg, paths["algebra"])
    _emit({"seed": args.seed, **paths})
    return 0


def _cmd_oracle_solve(args) -> int:
    A = load_structure(args.instance)
    B = load_structure(args.template)
    if args.algebra and not args.unchecked:
        alg = load_algebra(args.algebra)
        bad = validate_template(B, alg)
        if bad:
            raise InputError(
                f"template relations not preserved by the algebra: {bad}"
            )
    assignment = brute_force_hom(A, B)
    if assignment is None:
        _emit({"verdict": "UNSAT"})
        return 1
    _emit({str(k): v for k, v in sorted(assignment.items())})
    return 0


def _cmd_report(args) -> int:
    try:
        with open(args.input) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {args.input}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {args.input}: {exc}")
    if isinstance(doc, dict) and "steps" in doc:
        paths = render_trace(doc, args.out_dir)
    elif isinstance(doc, list):
        paths = render_lemmas(doc, args.out_dir)
    else:
        raise InputError("input is neither a solve trace nor a lemma report list")
    _emit({"written": paths})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cd4csp",
        description="bounded-width CSP solving over CD(4) templates",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"cd4csp {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-jonsson", help="verify the chain identities")
    p.add_argument("algebra")
    p.set_defaults(func=_cmd_check_jonsson)

    p = sub.add_parser("preprocess", help="derive absorption-idempotent terms")
    p.add_argument("algebra")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("consistency", help="run the consistency fixpoint only")
    p.add_argument("--instance", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=_cmd_consistency)

    p = sub.add_parser("solve", help="decide and produce a homomorphism")
    p.add_argument("--algebra", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--unchecked", action="store_true",
                   help="skip the polymorphism validation of the template")
    p.add_argument("--trace", default=None, help="write the step trace here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("lemmas", help="run the structural check suite")
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--budget-sec", type=float, default=None)
    p.set_defaults(func=_cmd_lemmas)

    p = sub.add_parser("gen", help="write a random instance/template/algebra triple")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("oracle", help="brute-force ground truth")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    po = osub.add_parser("solve", help="exhaustive homomorphism search")
    po.add_argument("--algebra", default=None)
    po.add_argument("--template", required=True)
    po.add_argument("--instance", required=True)
    po.add_argument("--unchecked", action="store_true")
    po.set_defaults(func=_cmd_oracle_solve)

    p = sub.add_parser("report", help="render a trace or lemma JSON to figures")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ResourceBudgetError) as exc:
        kind = "resource" if isinstance(exc, ResourceBudgetError) else "input"
        _emit({"error": {"type": kind, "message": str(exc)}})
        return 2
    except InvariantViolation as exc:
        payload = {"error": {"type": "invariant", "message": str(exc)}}
        if exc.payload is not None:
            payload["error"]["payload"] = exc.payload
        _emit(payload)
        return 3


if __name__ == "__main__":
    sys.exit(main())
