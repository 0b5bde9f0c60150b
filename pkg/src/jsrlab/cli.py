"""Command-line front end.

Exit codes: 0 success, 1 verification suite failed, 2 usage or schema error,
3 resource budget exceeded.  Reports go to ``--out`` (written atomically) or to
stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import algebra as alg
from . import io as jio
from . import jsr, opmodel, verify
from .errors import ConditioningError, ResourceError, SchemaError, UsageError

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

BUDGET_ENV = "JSRLAB_BUDGET"


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _node_budget(default: float) -> float:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return default
    try:
        val = int(raw)
    except ValueError:
        val = 0
    if val < 1:
        raise UsageError(f"{BUDGET_ENV} must be a positive integer, got {raw!r}")
    return float(val)


def _read_document(path: str) -> jio.Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return jio.parse_document(text)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".jsrlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _tables(ms: jsr.MatrixSet, depth: int) -> list[dict]:
    rows = []
    for n in range(1, depth + 1):
        rate, word = jsr.lower_bound_bw(ms, n)
        rows.append({"n": n, "upper_bound": jsr.upper_bound(ms, n), "r_n": rate,
                     "r_n_witness": list(word)})
    return rows


def _brute_enclosure(rows: list[dict], delta: float) -> jsr.Enclosure:
    hi = min(r["upper_bound"] for r in rows)
    best = max(rows, key=lambda r: r["r_n"])  # first maximiser: shortest word
    lo = min(best["r_n"], hi)
    return jsr.Enclosure(lo=lo, hi=hi, lo_witness=tuple(best["r_n_witness"]),
                         depth_reached=len(rows), converged=hi - lo <= delta,
                         nodes=0, delta=delta, norm="identity")


def _bounds_report(doc: jio.Document, depth: int, delta: float, algorithm: str,
                   node_budget: float) -> dict:
    report: dict = {"kind": doc.kind, "algorithm": algorithm, "depth": depth, "delta": delta}
    if doc.kind == "matrix_set":
        ms = doc.value
    elif doc.kind == "algebra":
        ok, resid = alg.check_associativity(doc.value)
        if not ok:
            raise SchemaError(f"algebra is not associative: max associator residual {resid:.3g}")
        if not doc.elements:
            raise SchemaError("payload.elements: an algebra bounds run needs a nonempty element list")
        _, mats = alg.regular_representation(doc.value, doc.elements)
        ms = jsr.MatrixSet(tuple(mats))
        report["representation"] = "left regular on the unitisation"
    else:
        ms = opmodel.embedded_set(doc.value)
        report["essential_jsr"] = opmodel.essential_jsr(doc.value)

    report["members"] = len(ms)
    report["dim"] = ms.dim
    rows = _tables(ms, depth)
    if algorithm == "brute":
        enc = _brute_enclosure(rows, delta)
    else:
        enc = jsr.jsr_enclosure(ms, depth, delta, node_budget=node_budget)
    report["enclosure"] = enc.to_dict()
    if doc.kind == "op_model":
        rho_e = report["essential_jsr"]
        bw_lo = max(r["r_n"] for r in rows)
        rhs_lo, rhs_hi = max(rho_e, bw_lo), max(rho_e, enc.hi)
        report["operator_bw"] = {
            "rhs_lo": rhs_lo,
            "rhs_hi": rhs_hi,
            "passed": bool(rhs_lo <= enc.hi + opmodel.TOL
                           and enc.lo <= rhs_hi + enc.width + opmodel.TOL),
        }
    report["table"] = rows
    return report


def _bounds_csv(report: dict) -> str:
    lines = ["quantity,n,value"]
    for r in report["table"]:
        lines.append(f"upper_bound,{r['n']},{r['upper_bound']!r}")
        lines.append(f"r_n,{r['n']},{r['r_n']!r}")
    enc = report["enclosure"]
    lines.append(f"enclosure_lo,,{enc['lo']!r}")
    lines.append(f"enclosure_hi,,{enc['hi']!r}")
    return "\n".join(lines) + "\n"


def cmd_bounds(args) -> int:
    if args.depth < 1:
        raise UsageError("--depth must be a positive integer")
    if not args.delta > 0:
        raise UsageError("--delta must be positive")
    doc = _read_document(args.input)
    report = _bounds_report(doc, args.depth, args.delta, args.algorithm,
                            _node_budget(jsr.NODE_BUDGET))
    text = jio.dumps(report) if args.format == "json" else _bounds_csv(report)
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.suite not in verify.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}")
    if args.cases < 1:
        raise UsageError("--cases must be at least 1")
    report = verify.run_suite(args.suite, args.seed, args.cases, args.depth, args.delta,
                              node_budget=_node_budget(verify.SUITE_NODE_BUDGET))
    if args.format == "csv":
        text = report.to_csv()
    else:
        text = jio.dumps(report.to_dict(include_elapsed=not args.deterministic))
    _emit(text, args.out)
    status = "passed" if report.passed else "FAILED"
    print(f"{args.suite}: {status} ({len(report.failures)} failures, "
          f"{len(report.inconclusive)} inconclusive of {report.cases})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_SUITE_FAILED


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def _ideal_report(a: alg.StructureAlgebra, op: str, basis: np.ndarray) -> dict:
    out = {"kind": "ideal", "operation": op, "parent_dim": a.dim, "dim": int(basis.shape[0]),
           "basis": [jio.encode_array(v) for v in basis]}
    if a.labels is not None:
        out["labels"] = list(a.labels)
    return out


def cmd_algebra(args) -> int:
    doc = _read_document(args.input)
    if doc.kind != "algebra":
        raise SchemaError(f"kind: expected 'algebra', got {doc.kind!r}")
    a = doc.value
    ok, resid = alg.check_associativity(a)
    if not ok:
        raise SchemaError(f"algebra is not associative: max associator residual {resid:.3g}")
    if args.radical:
        report = _ideal_report(a, "radical", alg.jacobson_radical(a).basis)
    elif args.rcqa:
        report = _ideal_report(a, "rcqa", alg.rcq_a_ideal(a).basis)
    elif args.center:
        report = _ideal_report(a, "center", alg.center(a))
    else:
        rad = alg.jacobson_radical(a)
        if rad.dim == a.dim:
            raise UsageError("the algebra is nilpotent; its quotient by the radical is zero")
        q, proj = alg.quotient(a, rad)
        report = jio.document_to_json(jio.Document("algebra", q))
        report["operation"] = "quotient_by_radical"
        report["projection"] = jio.encode_array(proj)
    _emit(jio.dumps(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="jsrlab", description="Joint spectral radius enclosures and checks.")
    p.add_argument("--deterministic", action="store_true",
                   help="reproducible output: omit wall-clock timings from reports")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    b = sub.add_parser("bounds", help="enclosure and bound tables for an input document")
    b.add_argument("input")
    b.add_argument("--depth", type=int, default=jsr.DEFAULT_DEPTH)
    b.add_argument("--delta", type=float, default=jsr.DEFAULT_DELTA)
    b.add_argument("--algorithm", choices=("enclosure", "brute"), default="enclosure")
    b.add_argument("--out")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS)
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="run a seeded verification suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cases", type=int, default=20)
    v.add_argument("--depth", type=int, default=jsr.DEFAULT_DEPTH)
    v.add_argument("--delta", type=float, default=jsr.DEFAULT_DELTA)
    v.add_argument("--out")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("algebra", help="radical, R_cq^a ideal, center or quotient of an algebra")
    a.add_argument("input")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--radical", action="store_true")
    g.add_argument("--rcqa", action="store_true")
    g.add_argument("--center", action="store_true")
    g.add_argument("--quotient-by-radical", action="store_true")
    a.add_argument("--out")
    a.add_argument("--deterministic", action="store_true", default=argparse.SUPPRESS)
    a.set_defaults(func=cmd_algebra)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ResourceError as exc:
        print(f"jsrlab: resource limit {exc.limit_name}={exc.limit:g} exceeded "
              f"(needs {exc.required:g}): {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, SchemaError, ConditioningError) as exc:
        print(f"jsrlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
