"""Seeded verification suites for JSR identities.

Each suite generates ``cases`` random instances.  Case ``i`` of a run with
seed ``s`` draws everything from ``numpy.random.default_rng([s, i])``, so any
single case can be replayed from the pair ``(seed, case)``.

Identities are checked on computed intervals, never on exact JSR values.  Two
intervals agree when they overlap with slack equal to the sum of their widths
plus ``1e-6``.  A case is ``fail`` only when the computed bounds contradict the
identity.  It is ``inconclusive`` when a budget ran out or a convergence
target was not reached.  A suite passes with no failures and at most 10%
inconclusive cases.
"""
from __future__ import annotations

import csv
import functools
import io
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import algebra as alg
from . import jsr, opmodel
from .errors import ResourceError, UsageError
from .jsr import Enclosure, MatrixSet
from .sampling import random_element, random_matrices, random_upper_triangular, unit_disc

BASE_TOL = 1e-6
INCONCLUSIVE_CAP = 0.10
CONVERGENCE_GAP = 0.02  # upper_triangular: hi - r1
BW_RELATIVE_GAP = 0.05  # berger_wang: hi - r_n <= 0.05 hi
SUITE_NODE_BUDGET = 2e5
SEMICONTINUITY_LEVEL = 8
SEMICONTINUITY_STEPS = 10
SEMICONTINUITY_CONSTANT = 10.0

SUITES = (
    "pass_identities",
    "berger_wang",
    "upper_triangular",
    "radical_quotient",
    "radical_adjoin",
    "algebraic_bw",
    "central_ideal",
    "operator_bw",
    "semicontinuity",
    "hull_invariance",
)

CSV_FIELDS = ("suite", "seed", "case", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "verdict")


@dataclass
class CaseResult:
    case: int
    description: str
    lhs_lo: float
    lhs_hi: float
    rhs_lo: float
    rhs_hi: float
    tolerance: float
    verdict: str  # "pass" | "fail" | "inconclusive"
    detail: str = ""


@dataclass
class VerificationReport:
    suite: str
    seed: int
    cases: int
    results: list[CaseResult]
    elapsed: float
    parameters: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[CaseResult]:
        return [r for r in self.results if r.verdict == "fail"]

    @property
    def inconclusive(self) -> list[CaseResult]:
        return [r for r in self.results if r.verdict == "inconclusive"]

    @property
    def passed(self) -> bool:
        return not self.failures and len(self.inconclusive) <= INCONCLUSIVE_CAP * self.cases

    def to_dict(self, include_elapsed: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "cases": self.cases,
            "parameters": dict(self.parameters),
            "passed": self.passed,
            "n_failures": len(self.failures),
            "n_inconclusive": len(self.inconclusive),
            "failures": [
                {"seed": self.seed, "case": r.case, "description": r.description,
                 "lhs": [r.lhs_lo, r.lhs_hi], "rhs": [r.rhs_lo, r.rhs_hi],
                 "tolerance": r.tolerance, "detail": r.detail}
                for r in self.failures
            ],
            "results": [asdict(r) for r in self.results],
        }
        if include_elapsed:
            out["elapsed"] = self.elapsed
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.results:
            w.writerow([self.suite, self.seed, r.case, repr(r.lhs_lo), repr(r.lhs_hi),
                        repr(r.rhs_lo), repr(r.rhs_hi), r.verdict])
        return buf.getvalue()


class _Inconclusive(Exception):
    pass


@dataclass(frozen=True)
class _Params:
    depth: int
    delta: float
    node_budget: float

    def enclose(self, ms, depth: int | None = None) -> Enclosure:
        return jsr.jsr_enclosure(ms, depth or self.depth, self.delta, node_budget=self.node_budget)

    def enclose_algebra(self, a, elems) -> Enclosure:
        return alg.algebra_jsr(a, elems, self.depth, self.delta, node_budget=self.node_budget)


def _slack(*encs: Enclosure) -> float:
    return sum(e.width for e in encs) + BASE_TOL


def _overlap_case(i, desc, lhs: Enclosure, rhs_lo, rhs_hi, tol, detail="") -> CaseResult:
    ok = lhs.lo <= rhs_hi + tol and rhs_lo <= lhs.hi + tol
    return CaseResult(i, desc, lhs.lo, lhs.hi, rhs_lo, rhs_hi, tol,
                      "pass" if ok else "fail", detail)


def _describe(ms: MatrixSet) -> str:
    return f"dim={ms.dim} members={len(ms)}"


# ---------------------------------------------------------------------------
# algebra pool
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _algebra_pool() -> tuple[tuple[str, alg.StructureAlgebra], ...]:
    return (
        ("T2", alg.upper_triangular(2)),
        ("T3", alg.upper_triangular(3)),
        ("M2+N2", alg.direct_sum(alg.full_matrix_algebra(2), alg.strictly_upper(2))),
        ("T2xT2", alg.null_extension(alg.upper_triangular(2))),
        ("M2xM2", alg.null_extension(alg.full_matrix_algebra(2))),
    )


@functools.lru_cache(maxsize=None)
def _central_pool() -> tuple[tuple[str, alg.StructureAlgebra], ...]:
    # algebras with a nonzero ideal inside the center
    return (
        ("M2+N2", alg.direct_sum(alg.full_matrix_algebra(2), alg.strictly_upper(2))),
        ("M2+C", alg.direct_sum(alg.full_matrix_algebra(2), alg.full_matrix_algebra(1))),
        ("T2+N2", alg.direct_sum(alg.upper_triangular(2), alg.strictly_upper(2))),
        ("N3", alg.strictly_upper(3)),
        ("T2xT2", alg.null_extension(alg.upper_triangular(2))),
    )


@functools.lru_cache(maxsize=None)
def _radical(name: str) -> alg.IdealBasis:
    return alg.jacobson_radical(dict(_algebra_pool())[name])


def _pick(rng, pool):
    return pool[int(rng.integers(len(pool)))]


def _elements(rng, a: alg.StructureAlgebra, max_members: int = 3) -> list[np.ndarray]:
    m = int(rng.integers(1, max_members + 1))
    return [random_element(rng, a.dim) for _ in range(m)]


def _quotient_enclosure(p: _Params, a, j: alg.IdealBasis, elems) -> tuple[float, float, float]:
    """``(lo, hi, width)`` for ``M/J``; the zero algebra has JSR 0."""
    if j.dim == a.dim:
        return 0.0, 0.0, 0.0
    q, proj = alg.quotient(a, j)
    e = p.enclose_algebra(q, alg.project_elements(proj, elems))
    return e.lo, e.hi, e.width


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _pass_identities(i, rng, p: _Params) -> CaseResult:
    ms = MatrixSet(tuple(random_matrices(rng, 2, 3)))
    e = p.enclose(ms)
    sq = p.enclose(jsr.power_set(ms, 2))
    lr = p.enclose(jsr.mult_operator_set(ms))
    lo2, hi2 = e.lo ** 2, e.hi ** 2
    # the square interval has width (hi + lo) * width
    tol = sq.width + lr.width + (hi2 - lo2) + BASE_TOL
    overlap_sq = sq.lo <= hi2 + tol and lo2 <= sq.hi + tol
    overlap_lr = lr.lo <= hi2 + tol and lo2 <= lr.hi + tol
    contained = sq.lo >= lo2 - BASE_TOL and sq.hi <= hi2 + BASE_TOL
    detail = f"M^2=[{sq.lo!r}, {sq.hi!r}] LR=[{lr.lo!r}, {lr.hi!r}]"
    if not (overlap_sq and overlap_lr):
        verdict = "fail"
    elif not contained:
        # an enclosure of M^2 wider than [lo^2, hi^2] is consistent, just looser
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return CaseResult(i, _describe(ms), sq.lo, sq.hi, lo2, hi2, tol, verdict, detail)


def _fixed_pair() -> MatrixSet:
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    return MatrixSet((e12, e12.T.copy()), "E12,E21")


def _berger_wang(i, rng, p: _Params) -> CaseResult:
    ms = _fixed_pair() if i == 0 else MatrixSet(tuple(random_matrices(rng, 3, 3)))
    e = p.enclose(ms)
    n = opmodel.bw_scan_depth(len(ms), p.depth)
    bw = jsr.bw_radius_estimate(ms, n)
    tol = _slack(e)
    desc = _describe(ms) + f" bw_depth={n}"
    if bw > e.hi + tol or e.lo > e.hi:
        verdict = "fail"
    elif e.hi - bw > BW_RELATIVE_GAP * e.hi:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return CaseResult(i, desc, e.lo, e.hi, bw, e.hi, tol, verdict)


def _upper_triangular(i, rng, p: _Params) -> CaseResult:
    mats = random_upper_triangular(rng, 3, 4)
    ms = MatrixSet(tuple(mats))
    r1 = max(float(np.abs(np.diag(a)).max()) for a in mats)
    e = p.enclose(ms)
    gap = e.hi - r1
    if e.lo < r1 - BASE_TOL or r1 > e.hi + BASE_TOL:
        verdict = "fail"
    elif gap > CONVERGENCE_GAP:
        verdict = "inconclusive" if e.budget_exhausted else "fail"
    else:
        verdict = "pass"
    return CaseResult(i, _describe(ms), e.lo, e.hi, r1, r1, CONVERGENCE_GAP, verdict,
                      f"hi - r1 = {gap!r}")


def _radical_quotient(i, rng, p: _Params) -> CaseResult:
    name, a = _pick(rng, _algebra_pool())
    elems = _elements(rng, a)
    rad = _radical(name)
    lhs = p.enclose_algebra(a, elems)
    lo, hi, w = _quotient_enclosure(p, a, rad, elems)
    return _overlap_case(i, f"algebra={name} members={len(elems)} rad_dim={rad.dim}",
                         lhs, lo, hi, lhs.width + w + BASE_TOL)


def _radical_adjoin(i, rng, p: _Params) -> CaseResult:
    name, a = _pick(rng, _algebra_pool())
    elems = _elements(rng, a)
    rad = _radical(name)
    coeffs = unit_disc(rng, rad.dim)
    extra = coeffs @ rad.basis
    lhs = p.enclose_algebra(a, elems)
    rhs = p.enclose_algebra(a, elems + [extra])
    return _overlap_case(i, f"algebra={name} members={len(elems)} rad_dim={rad.dim}",
                         lhs, rhs.lo, rhs.hi, _slack(lhs, rhs))


def _candidate_ideals(a: alg.StructureAlgebra, rng) -> list[tuple[str, alg.IdealBasis]]:
    rad = alg.jacobson_radical(a)
    out = [("zero", alg.IdealBasis(a, np.zeros((0, a.dim)))), ("rad", rad),
           ("rad^2", alg.ideal_product(a, rad, rad)), ("rcq_a", alg.rcq_a_ideal(a)),
           ("central", alg.central_ideal(a)),
           ("generated", alg.ideal_generated(a, random_element(rng, a.dim)))]
    return out


def _algebraic_bw(i, rng, p: _Params) -> CaseResult:
    name, a = _pick(rng, _algebra_pool())
    elems = _elements(rng, a)
    lhs = p.enclose_algebra(a, elems)
    _, mats = alg.regular_representation(a, elems)
    reg = MatrixSet(tuple(mats))
    n = opmodel.bw_scan_depth(len(reg), p.depth)
    bw_lo = jsr.bw_radius_estimate(reg, n)
    worst = None
    for label, j in _candidate_ideals(a, rng):
        qlo, qhi, qw = _quotient_enclosure(p, a, j, elems)
        rhs_lo, rhs_hi = max(qlo, bw_lo), max(qhi, lhs.hi)
        tol = lhs.width + qw + BASE_TOL
        res = _overlap_case(i, f"algebra={name} members={len(elems)} ideal={label} dim={j.dim}",
                            lhs, rhs_lo, rhs_hi, tol)
        if worst is None or (res.verdict == "fail" and worst.verdict != "fail"):
            worst = res
    return worst


def _central_ideal(i, rng, p: _Params) -> CaseResult:
    name, a = _pick(rng, _central_pool())
    elems = _elements(rng, a)
    j = alg.central_ideal(a)
    lhs = p.enclose_algebra(a, elems)
    r1 = alg.algebra_r1(a, elems)
    qlo, qhi, qw = _quotient_enclosure(p, a, j, elems)
    return _overlap_case(i, f"algebra={name} members={len(elems)} central_dim={j.dim}",
                         lhs, max(qlo, r1), max(qhi, r1), lhs.width + qw + BASE_TOL)


def _operator_bw(i, rng, p: _Params) -> CaseResult:
    fam = opmodel.random_family(rng)
    rep = opmodel.verify_operator_bw(fam, p.depth, p.delta, node_budget=p.node_budget)
    desc = f"members={len(fam)} corner={max(t.n for t in fam)} rho_e={rep.rho_e!r}"
    return CaseResult(i, desc, rep.lhs.lo, rep.lhs.hi, rep.rhs_lo, rep.rhs_hi,
                      rep.lhs.width + rep.tol, "pass" if rep.passed else "fail",
                      f"bw_lo={rep.bw_lo!r} bw_depth={rep.bw_depth}")


def _semicontinuity(i, rng, p: _Params) -> CaseResult:
    base = random_matrices(rng, 3, 3)
    scale = max(np.linalg.norm(x, 2) for x in base)
    ms = MatrixSet(tuple(x / scale for x in base))  # normalised to ||M|| = 1
    pert = [unit_disc(rng, x.shape) for x in base]
    n = SEMICONTINUITY_LEVEL
    u0 = jsr.upper_bound(ms, n)
    const = SEMICONTINUITY_CONSTANT * ms.norm()
    worst_ratio = 0.0
    for k in range(1, SEMICONTINUITY_STEPS + 1):
        mk = MatrixSet(tuple(x + d / k for x, d in zip(ms.members, pert)))
        uk = jsr.upper_bound(mk, n)
        worst_ratio = max(worst_ratio, abs(uk - u0) * k / const)
    e0 = p.enclose(ms)
    ek = p.enclose(MatrixSet(tuple(x + d / SEMICONTINUITY_STEPS for x, d in zip(ms.members, pert))))
    # rho(M_k) <= u(M_k, n) <= u(M, n) + C / k
    rhs_hi = u0 + const / SEMICONTINUITY_STEPS
    tol = e0.width + ek.width + BASE_TOL
    ok = worst_ratio <= 1.0 and ek.lo <= rhs_hi + tol
    return CaseResult(i, _describe(ms) + f" C={const!r}", ek.lo, ek.hi, e0.lo, rhs_hi, tol,
                      "pass" if ok else "fail",
                      f"max_k k*|u_k - u|/C = {worst_ratio!r}")


def _hull_invariance(i, rng, p: _Params) -> CaseResult:
    ms = MatrixSet(tuple(random_matrices(rng, 3, 3)))
    hull = jsr.abs_hull_sample(ms, 3, int(rng.integers(2 ** 31)))
    e = p.enclose(ms)
    h = p.enclose(hull)
    return _overlap_case(i, _describe(ms) + f" hull_members={len(hull)}", e, h.lo, h.hi,
                         _slack(e, h))


_RUNNERS = {
    "pass_identities": _pass_identities,
    "berger_wang": _berger_wang,
    "upper_triangular": _upper_triangular,
    "radical_quotient": _radical_quotient,
    "radical_adjoin": _radical_adjoin,
    "algebraic_bw": _algebraic_bw,
    "central_ideal": _central_ideal,
    "operator_bw": _operator_bw,
    "semicontinuity": _semicontinuity,
    "hull_invariance": _hull_invariance,
}


def run_case(name: str, seed: int, case: int, depth: int = jsr.DEFAULT_DEPTH,
             delta: float = jsr.DEFAULT_DELTA, node_budget: float = SUITE_NODE_BUDGET) -> CaseResult:
    """Run (or replay) a single case of a suite."""
    if name not in _RUNNERS:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    rng = np.random.default_rng([seed, case])
    params = _Params(depth, delta, node_budget)
    try:
        return _RUNNERS[name](case, rng, params)
    except ResourceError as exc:
        nan = float("nan")
        return CaseResult(case, "resource limit", nan, nan, nan, nan, nan, "inconclusive", str(exc))


def run_suite(name: str, seed: int = 0, cases: int = 20, depth: int = jsr.DEFAULT_DEPTH,
              delta: float = jsr.DEFAULT_DELTA, node_budget: float = SUITE_NODE_BUDGET) -> VerificationReport:
    if name not in _RUNNERS:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if isinstance(cases, bool) or not isinstance(cases, (int, np.integer)) or cases < 1:
        raise UsageError("cases must be a positive integer")
    if depth < 1:
        raise UsageError("depth must be a positive integer")
    if not delta > 0:
        raise UsageError("delta must be positive")
    t0 = time.perf_counter()
    results = [run_case(name, seed, i, depth, delta, node_budget) for i in range(int(cases))]
    params = {"depth": depth, "delta": delta, "node_budget": node_budget}
    return VerificationReport(name, seed, int(cases), results, time.perf_counter() - t0, params)
