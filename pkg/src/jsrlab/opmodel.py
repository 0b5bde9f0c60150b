"""Scalar plus finite corner: ``T = lambda I + P_n K P_n`` on l^2.

``T`` is block diagonal, ``(lambda I_n + K)`` on the first ``n`` coordinates
and ``lambda`` on the rest, so the operator norm and spectral radius of any
product equal those of the ``(n + 1) x (n + 1)`` matrix ``diag(lambda I_n + K,
lambda)``.  The image in the Calkin algebra is the scalar ``lambda``, which
makes the essential norm ``|lambda|`` and the essential JSR of a family the
largest ``|lambda_i|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jsr
from .errors import ResourceError, UsageError
from .jsr import DEFAULT_DELTA, DEFAULT_DEPTH, Enclosure, MatrixSet
from .matcore import as_cmatrix, op_norm, spectral_radius
from .sampling import annulus, unit_disc

TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ScalarPlusCorner:
    lam: complex
    K: np.ndarray

    def __post_init__(self):
        lam = complex(self.lam)
        if not np.isfinite(lam.real) or not np.isfinite(lam.imag):
            raise UsageError("lambda must be finite")
        k = as_cmatrix(self.K)
        k.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "K", k)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def padded(self, n: int) -> "ScalarPlusCorner":
        if n < self.n:
            raise UsageError(f"cannot pad a corner of size {self.n} down to {n}")
        if n == self.n:
            return self
        k = np.zeros((n, n), dtype=np.complex128)
        k[: self.n, : self.n] = self.K
        return ScalarPlusCorner(self.lam, k)

    def __matmul__(self, other: "ScalarPlusCorner") -> "ScalarPlusCorner":
        n = max(self.n, other.n)
        a, b = self.padded(n), other.padded(n)
        return ScalarPlusCorner(a.lam * b.lam, a.lam * b.K + b.lam * a.K + a.K @ b.K)

    def to_json(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag],
                "K": [[[z.real, z.imag] for z in row] for row in self.K.tolist()]}

    @classmethod
    def from_json(cls, obj: dict) -> "ScalarPlusCorner":
        lam = obj["lambda"]
        k = np.array(obj["K"], dtype=float)
        if k.ndim != 3 or k.shape[2] != 2:
            raise UsageError("K must be a matrix of [re, im] pairs")
        return cls(complex(lam[0], lam[1]), k[..., 0] + 1j * k[..., 1])


def embed(t: ScalarPlusCorner, n: int | None = None) -> np.ndarray:
    """``diag(lambda I_n + K, lambda)``, after padding the corner to size ``n``."""
    t = t.padded(n or t.n)
    out = np.zeros((t.n + 1, t.n + 1), dtype=np.complex128)
    out[: t.n, : t.n] = t.K + t.lam * np.eye(t.n)
    out[t.n, t.n] = t.lam
    return out


def operator_norm(t: ScalarPlusCorner) -> float:
    return op_norm(embed(t))


def operator_spectral_radius(t: ScalarPlusCorner) -> float:
    return spectral_radius(embed(t))


def essential_norm(t: ScalarPlusCorner) -> float:
    return abs(t.lam)


def essential_jsr(family) -> float:
    family = list(family)
    if not family:
        raise UsageError("the family must be nonempty")
    return max(abs(t.lam) for t in family)


def restriction_to_complement(t: ScalarPlusCorner) -> ScalarPlusCorner:
    """``T`` restricted to the invariant subspace orthogonal to the corner: ``lambda I``."""
    return ScalarPlusCorner(t.lam, np.zeros((1, 1)))


def embedded_set(family) -> MatrixSet:
    family = list(family)
    if not family:
        raise UsageError("the family must be nonempty")
    n = max(t.n for t in family)
    return MatrixSet(tuple(embed(t, n) for t in family))


@dataclass(frozen=True)
class OperatorBWReport:
    lhs: Enclosure
    rho_e: float
    bw_lo: float
    bw_depth: int
    rhs_lo: float
    rhs_hi: float
    tol: float
    passed: bool


def bw_scan_depth(m: int, depth: int, budget: float = jsr.PRODUCT_BUDGET) -> int:
    """Largest ``n <= depth`` whose rotation-class scan fits ``budget``."""
    n = 0
    while n < depth and jsr.necklace_count(m, n + 1) <= budget and float(m) ** (n + 1) <= 64 * budget:
        n += 1
    if n == 0:
        raise ResourceError("no word length fits the budget", "product_budget", budget, m)
    return n


def verify_operator_bw(family, depth: int = DEFAULT_DEPTH, delta: float = DEFAULT_DELTA,
                       tol: float = TOL, **kwargs) -> OperatorBWReport:
    """Check ``rho(M) = max(rho_e(M), r(M))`` at the level of computed bounds.

    ``lhs`` is the JSR enclosure of the embedded family; the right-hand side
    is bracketed by ``[max(rho_e, r_lo), max(rho_e, lhs.hi)]`` where ``r_lo``
    is the finite-depth BW estimate (``r <= rho <= lhs.hi`` bounds ``r`` above).
    """
    ms = embedded_set(family)
    lhs = jsr.jsr_enclosure(ms, depth, delta, **kwargs)
    rho_e = essential_jsr(family)
    n = bw_scan_depth(len(ms), depth)
    bw_lo = jsr.bw_radius_estimate(ms, n)
    rhs_lo = max(rho_e, bw_lo)
    rhs_hi = max(rho_e, lhs.hi)
    passed = rhs_lo <= lhs.hi + tol and lhs.lo <= rhs_hi + lhs.width + tol
    return OperatorBWReport(lhs, rho_e, bw_lo, n, rhs_lo, rhs_hi, tol, bool(passed))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def random_operator(rng: np.random.Generator, n: int) -> ScalarPlusCorner:
    """``lambda`` uniform in the annulus ``0.1 <= |lambda| <= 1``, corner in the unit disc."""
    return ScalarPlusCorner(complex(annulus(rng, (), 0.1, 1.0)), unit_disc(rng, (n, n)))


def nilpotent_corner_family(rng: np.random.Generator, m: int, n: int,
                            lam: complex | None = None) -> list[ScalarPlusCorner]:
    """Members share a strictly upper triangular corner pattern, so every
    product has a nilpotent corner and ``rho`` of the family is ``max |lambda|``."""
    out = []
    for _ in range(m):
        lam_i = lam if lam is not None else complex(annulus(rng, (), 0.1, 1.0))
        k = np.triu(unit_disc(rng, (n, n)) * 2.0, 1) if n > 1 else np.zeros((1, 1))
        out.append(ScalarPlusCorner(lam_i, k))
    return out


def random_family(rng: np.random.Generator, max_corner: int = 3,
                  max_members: int = 3) -> list[ScalarPlusCorner]:
    """A generic family, or with probability 1/4 an adversarial nilpotent-corner family."""
    m = int(rng.integers(1, max_members + 1))
    n = int(rng.integers(1, max_corner + 1))
    if rng.uniform() < 0.25:
        return nilpotent_corner_family(rng, m, n)
    # mixed corner sizes exercise zero padding
    return [random_operator(rng, int(rng.integers(1, n + 1))) for _ in range(m)]
