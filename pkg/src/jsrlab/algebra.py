"""Finite-dimensional associative algebras given by structure constants.

An algebra of dimension ``d`` is a ``(d, d, d)`` complex array ``c`` with
``b_i b_j = sum_k c[i, j, k] b_k``; elements are coordinate vectors.  Ideals
are stored as row bases of coordinate vectors.

In finite dimension every algebra is bicompact, so the compactly
quasinilpotent radical coincides with the Jacobson radical.  This module
computes the radical with Dickson's trace criterion in characteristic zero:
``x`` lies in the radical iff ``tr(L_{xy}) = 0`` for all ``y`` in the
unitisation.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConditioningError, UsageError
from .jsr import DEFAULT_DELTA, DEFAULT_DEPTH, Enclosure, MatrixSet, jsr_enclosure
from .matcore import spectral_radius

RANK_RTOL = 1e-8
# relative singular values strictly inside this band make a rank call unsafe
AMBIGUOUS_BAND = (1e-12, 1e-5)
ASSOC_TOL = 1e-9
IDEAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class StructureAlgebra:
    c: np.ndarray
    labels: tuple[str, ...] | None = None
    # optional faithful matrix representation, one matrix per basis element
    rep: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=np.complex128)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] == 0:
            raise UsageError(f"structure constants must have shape (d, d, d), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise UsageError("structure constants must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != c.shape[0]:
                raise UsageError("one label per basis element is required")
            object.__setattr__(self, "labels", labels)
        if self.rep is not None:
            rep = np.array(self.rep, dtype=np.complex128)
            if rep.ndim != 3 or rep.shape[0] != c.shape[0]:
                raise UsageError("rep must hold one square matrix per basis element")
            object.__setattr__(self, "rep", rep)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def basis_vector(self, i) -> np.ndarray:
        if isinstance(i, str):
            if self.labels is None:
                raise UsageError("algebra has no basis labels")
            i = self.labels.index(i)
        v = np.zeros(self.dim, dtype=np.complex128)
        v[i] = 1.0
        return v

    def element(self, coeffs: dict) -> np.ndarray:
        """Coordinate vector from ``{label_or_index: coefficient}``."""
        v = np.zeros(self.dim, dtype=np.complex128)
        for key, val in coeffs.items():
            v += val * self.basis_vector(key)
        return v

    def mul(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.c)

    def left(self, a) -> np.ndarray:
        return np.einsum("i,ijk->kj", np.asarray(a, dtype=np.complex128), self.c)

    def right(self, a) -> np.ndarray:
        return np.einsum("j,ijk->ki", np.asarray(a, dtype=np.complex128), self.c)

    def as_matrix(self, x) -> np.ndarray:
        if self.rep is None:
            raise UsageError("algebra carries no matrix representation")
        return np.tensordot(np.asarray(x, dtype=np.complex128), self.rep, axes=1)


@dataclass(frozen=True, eq=False)
class IdealBasis:
    parent: StructureAlgebra
    basis: np.ndarray  # (r, d), rows

    def __post_init__(self):
        b = np.array(self.basis, dtype=np.complex128).reshape(-1, self.parent.dim)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def orthonormal(self) -> np.ndarray:
        """Orthonormal rows spanning the ideal."""
        return _orth(self.basis)

    def residual(self, x) -> float:
        """Distance from ``x`` to the ideal."""
        q = self.orthonormal()
        x = np.asarray(x, dtype=np.complex128)
        return float(np.linalg.norm(x - (x @ q.conj().T) @ q))

    def contains(self, x, tol: float = IDEAL_TOL) -> bool:
        return self.residual(x) <= tol * max(1.0, float(np.linalg.norm(x)))

    def closure_residual(self) -> float:
        """Largest relative residual of ``b_i v`` and ``v b_i`` outside the span."""
        a = self.parent
        if self.dim == 0:
            return 0.0
        worst = 0.0
        scale = max(1.0, float(np.abs(a.c).max()))
        for v in self.orthonormal():
            for i in range(a.dim):
                e = a.basis_vector(i)
                worst = max(worst, self.residual(a.mul(e, v)) / scale,
                            self.residual(a.mul(v, e)) / scale)
        return worst

    def is_valid(self) -> bool:
        if self.dim == 0:
            return True
        s = np.linalg.svd(self.basis, compute_uv=False)
        return bool(s[-1] >= 1e-8 * s[0] and self.closure_residual() <= IDEAL_TOL)

    def contains_ideal(self, other: "IdealBasis", tol: float = IDEAL_TOL) -> bool:
        return all(self.contains(v, tol) for v in other.orthonormal())


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------

def _orth(rows: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.complex128)
    if rows.shape[0] == 0:
        return rows
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s[0] == 0:
        return rows[:0]
    return vh[: int(np.sum(s > rtol * s[0]))]


def _kernel(mat: np.ndarray, what: str, rtol: float = RANK_RTOL) -> np.ndarray:
    """Row basis of ``{x : mat @ x = 0}``; raises on an ambiguous rank."""
    n = mat.shape[1]
    if mat.shape[0] == 0 or not np.any(mat):
        return np.eye(n, dtype=np.complex128)
    _, s, vh = np.linalg.svd(mat)
    full = np.zeros(n)
    full[: s.size] = s
    rel = full / full[0]
    lo, hi = AMBIGUOUS_BAND
    if np.any((rel > lo) & (rel < hi)):
        raise ConditioningError(
            f"{what}: singular values {rel[(rel > lo) & (rel < hi)]} fall in the ambiguity band")
    return vh[rel <= rtol].conj()


def _rref(rows: np.ndarray) -> np.ndarray:
    """Reduced row echelon form with partial pivoting; for readable bases."""
    a = np.array(rows, dtype=np.complex128)
    r, n = a.shape
    row = 0
    for col in range(n):
        if row == r:
            break
        piv = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[piv, col]) <= 1e-10:
            continue
        a[[row, piv]] = a[[piv, row]]
        a[row] /= a[row, col]
        for k in range(r):
            if k != row:
                a[k] -= a[k, col] * a[row]
        row += 1
    a[np.abs(a) < 1e-13] = 0
    return a[:row] + 0.0  # drop negative zeros


def _ideal(a: StructureAlgebra, rows: np.ndarray) -> IdealBasis:
    rows = _orth(rows) if rows.shape[0] else rows
    return IdealBasis(a, _rref(rows) if rows.shape[0] else rows.reshape(0, a.dim))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def check_associativity(a: StructureAlgebra) -> tuple[bool, float]:
    """Largest associator entry ``|(b_i b_j) b_l - b_i (b_j b_l)|``."""
    c = a.c
    lhs = np.einsum("ijk,klm->ijlm", c, c)
    rhs = np.einsum("jlk,ikm->ijlm", c, c)
    resid = float(np.abs(lhs - rhs).max())
    return resid <= ASSOC_TOL * max(1.0, float(np.abs(c).max()) ** 2), resid


def mult_matrices(a: StructureAlgebra, x) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of ``y -> x y`` and ``y -> y x`` in the coordinate basis."""
    return a.left(x), a.right(x)


def find_unit(a: StructureAlgebra) -> np.ndarray | None:
    """Two-sided unit if one exists (to ``1e-9``), else ``None``."""
    d, c = a.dim, a.c
    eye = np.eye(d).reshape(-1)
    lhs = np.concatenate([c.transpose(1, 2, 0).reshape(d * d, d),
                          c.transpose(0, 2, 1).reshape(d * d, d)])
    rhs = np.concatenate([eye, eye])
    e, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.abs(lhs @ e - rhs).max() <= 1e-9:
        return e
    return None


def unitize(a: StructureAlgebra) -> StructureAlgebra:
    """``A`` itself when it has a unit, otherwise ``A + C1`` with the unit appended last."""
    if find_unit(a) is not None:
        return a
    d = a.dim
    c = np.zeros((d + 1, d + 1, d + 1), dtype=np.complex128)
    c[:d, :d, :d] = a.c
    for i in range(d + 1):
        c[d, i, i] = 1.0
        c[i, d, i] = 1.0
    labels = a.labels + ("1",) if a.labels is not None else None
    rep = None
    if a.rep is not None:
        n = a.rep.shape[1]
        rep = np.zeros((d + 1, n + 1, n + 1), dtype=np.complex128)
        rep[:d, :n, :n] = a.rep
        rep[d] = np.eye(n + 1)
    return StructureAlgebra(c, labels, rep)


def _embed_in_unitization(a: StructureAlgebra, u: StructureAlgebra, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    return x if u.dim == a.dim else np.concatenate([x, [0.0]])


def jacobson_radical(a: StructureAlgebra) -> IdealBasis:
    """Largest nilpotent ideal, from the kernel of the trace form on ``A^1``."""
    u = unitize(a)
    traces = np.einsum("kii->k", u.c)  # tr(L_{b_k})
    gram = np.einsum("ijk,k->ij", u.c, traces)
    ker = _kernel(gram.T, "jacobson_radical")
    ker = ker[:, : a.dim]
    rad = _ideal(a, ker)
    _check_nilpotent(a, rad)
    return rad


def _check_nilpotent(a: StructureAlgebra, j: IdealBasis) -> None:
    if j.dim == 0:
        return
    base = j.orthonormal()
    power = base
    for _ in range(a.dim):
        prods = np.array([a.mul(x, y) for x in power for y in base])
        power = _orth(prods, rtol=1e-10) if np.abs(prods).max() > 1e-8 else prods[:0]
        if power.shape[0] == 0:
            return
    raise ConditioningError("computed radical is not nilpotent to 1e-8")


def rcq_a_ideal(a: StructureAlgebra) -> IdealBasis:
    """``{x : x [b_i, b_j] in Rad(A) for all i, j}``, the largest ideal
    commutative modulo the radical."""
    rad = jacobson_radical(a).orthonormal()
    d = a.dim
    proj = np.eye(d) - rad.conj().T @ rad if rad.shape[0] else np.eye(d)
    blocks = []
    for i, j in product(range(d), repeat=2):
        if j <= i:
            continue
        e_i, e_j = a.basis_vector(i), a.basis_vector(j)
        comm = a.mul(e_i, e_j) - a.mul(e_j, e_i)
        if np.any(np.abs(comm) > 0):
            blocks.append(proj @ a.right(comm))
    if not blocks:
        return IdealBasis(a, np.eye(d))
    ker = _kernel(np.concatenate(blocks), "rcq_a_ideal")
    return _ideal(a, ker)


def center(a: StructureAlgebra) -> np.ndarray:
    """Row basis of ``{x : L_x = R_x}``."""
    d = a.dim
    cols = [(a.left(a.basis_vector(i)) - a.right(a.basis_vector(i))).reshape(-1) for i in range(d)]
    ker = _kernel(np.stack(cols, axis=1), "center")
    return _rref(_orth(ker)) if ker.shape[0] else ker


def ideal_generated(a: StructureAlgebra, elems) -> IdealBasis:
    """Smallest two-sided ideal containing ``elems``."""
    rows = _orth(np.atleast_2d(np.asarray(elems, dtype=np.complex128)))
    while True:
        new = [rows]
        for v in rows:
            for i in range(a.dim):
                e = a.basis_vector(i)
                new.append(np.stack([a.mul(e, v), a.mul(v, e), a.mul(e, a.mul(v, e))]))
        grown = _orth(np.concatenate(new))
        if grown.shape[0] == rows.shape[0]:
            return _ideal(a, grown)
        rows = grown


def ideal_product(a: StructureAlgebra, j1: IdealBasis, j2: IdealBasis) -> IdealBasis:
    """The ideal spanned by products ``x y`` with ``x in j1``, ``y in j2``."""
    if j1.dim == 0 or j2.dim == 0:
        return IdealBasis(a, np.zeros((0, a.dim)))
    prods = np.array([a.mul(x, y) for x in j1.orthonormal() for y in j2.orthonormal()])
    if np.abs(prods).max() <= 1e-12:
        return IdealBasis(a, np.zeros((0, a.dim)))
    return ideal_generated(a, _orth(prods))


def central_ideal(a: StructureAlgebra) -> IdealBasis:
    """Largest two-sided ideal contained in the center."""
    z = center(a)
    rows = _orth(z) if z.shape[0] else z
    while rows.shape[0]:
        ok = []
        q = rows
        for v in rows:
            images = [a.mul(a.basis_vector(i), v) for i in range(a.dim)]
            images += [a.mul(v, a.basis_vector(i)) for i in range(a.dim)]
            ok.append(np.concatenate([im - (im @ q.conj().T) @ q for im in images]))
        # x = sum t_k rows_k must keep every image inside span(rows)
        constraint = np.stack(ok, axis=1)
        ker = _kernel(constraint, "central_ideal")
        if ker.shape[0] == rows.shape[0]:
            break
        rows = _orth(ker @ rows) if ker.shape[0] else rows[:0]
    return _ideal(a, rows)


def quotient(a: StructureAlgebra, j: IdealBasis) -> tuple[StructureAlgebra, np.ndarray]:
    """Quotient algebra ``A/J`` and the projection matrix ``q`` (shape ``(d - r, d)``).

    The quotient basis is the image of coordinate vectors chosen greedily to
    complement ``J``, so coordinate-aligned ideals give coordinate quotients.
    """
    d = a.dim
    if j.dim == 0:
        return a, np.eye(d, dtype=np.complex128)
    if j.closure_residual() > IDEAL_TOL:
        raise UsageError(f"not a two-sided ideal: closure residual {j.closure_residual():.3g}")
    jb = j.orthonormal()
    chosen: list[int] = []
    span = jb
    for k in range(d):
        trial = np.concatenate([span, np.eye(d)[k:k + 1]])
        if np.linalg.matrix_rank(trial, tol=1e-8) > span.shape[0]:
            chosen.append(k)
            span = trial
        if span.shape[0] == d:
            break
    basis = np.concatenate([jb, np.eye(d)[chosen]])  # rows
    inv = np.linalg.inv(basis.T)  # coordinates in the adapted basis
    proj = inv[jb.shape[0]:]
    c = np.einsum("qk,abk->abq", proj, a.c[np.ix_(chosen, chosen)])
    labels = tuple(a.labels[k] for k in chosen) if a.labels is not None else None
    return StructureAlgebra(c, labels), proj


def regular_representation(a: StructureAlgebra, elems) -> tuple[StructureAlgebra, list[np.ndarray]]:
    """Left multiplication matrices of ``elems`` acting on the unitisation."""
    u = unitize(a)
    mats = [u.left(_embed_in_unitization(a, u, x)) for x in elems]
    return u, mats


def algebra_jsr(a: StructureAlgebra, elems, depth: int = DEFAULT_DEPTH,
                delta: float = DEFAULT_DELTA, **kwargs) -> Enclosure:
    """JSR enclosure of a finite subset, normed by ``||a|| = ||L_a on A^1||``."""
    elems = list(elems)
    if not elems:
        raise UsageError("the element set must be nonempty")
    _, mats = regular_representation(a, elems)
    return jsr_enclosure(MatrixSet(tuple(mats)), depth, delta, **kwargs)


def algebra_r1(a: StructureAlgebra, elems) -> float:
    """``max rho(x)`` over the set, computed through the regular representation."""
    _, mats = regular_representation(a, elems)
    return max(spectral_radius(m) for m in mats)


def project_elements(proj: np.ndarray, elems) -> list[np.ndarray]:
    return [proj @ np.asarray(x, dtype=np.complex128) for x in elems]


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _unit_algebra(n: int, pairs: list[tuple[int, int]]) -> StructureAlgebra:
    index = {p: k for k, p in enumerate(pairs)}
    d = len(pairs)
    c = np.zeros((d, d, d), dtype=np.complex128)
    rep = np.zeros((d, n, n), dtype=np.complex128)
    for p, (i, j) in enumerate(pairs):
        rep[p, i, j] = 1.0
        for q, (k, l) in enumerate(pairs):
            if j == k and (i, l) in index:
                c[p, q, index[(i, l)]] = 1.0
    labels = tuple(f"E{i + 1}{j + 1}" for i, j in pairs)
    return StructureAlgebra(c, labels, rep)


def full_matrix_algebra(n: int) -> StructureAlgebra:
    return _unit_algebra(n, [(i, j) for i in range(n) for j in range(n)])


def upper_triangular(n: int) -> StructureAlgebra:
    return _unit_algebra(n, [(i, j) for i in range(n) for j in range(i, n)])


def strictly_upper(n: int) -> StructureAlgebra:
    if n < 2:
        raise UsageError("strictly upper triangular algebras need n >= 2")
    return _unit_algebra(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def null_algebra(k: int) -> StructureAlgebra:
    """``k``-dimensional algebra with all products zero."""
    rep = np.zeros((k, k + 1, k + 1), dtype=np.complex128)
    for i in range(k):
        rep[i, 0, i + 1] = 1.0
    return StructureAlgebra(np.zeros((k, k, k)), tuple(f"v{i + 1}" for i in range(k)), rep)


def _block_rep(r1, r2):
    n1, n2 = r1.shape[1], r2.shape[1]
    out = np.zeros((r1.shape[0] + r2.shape[0], n1 + n2, n1 + n2), dtype=np.complex128)
    out[: r1.shape[0], :n1, :n1] = r1
    out[r1.shape[0]:, n1:, n1:] = r2
    return out


def direct_sum(a: StructureAlgebra, b: StructureAlgebra) -> StructureAlgebra:
    da, db = a.dim, b.dim
    c = np.zeros((da + db,) * 3, dtype=np.complex128)
    c[:da, :da, :da] = a.c
    c[da:, da:, da:] = b.c
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = tuple(f"a.{s}" for s in a.labels) + tuple(f"b.{s}" for s in b.labels)
    rep = _block_rep(a.rep, b.rep) if a.rep is not None and b.rep is not None else None
    return StructureAlgebra(c, labels, rep)


def null_extension(a: StructureAlgebra) -> StructureAlgebra:
    """Trivial extension ``A ⋉ A``: ``(x, v)(y, w) = (xy, xw + vy)``, so ``V V = 0``."""
    d = a.dim
    c = np.zeros((2 * d,) * 3, dtype=np.complex128)
    c[:d, :d, :d] = a.c
    c[:d, d:, d:] = a.c
    c[d:, :d, d:] = a.c
    labels = None
    if a.labels is not None:
        labels = a.labels + tuple(f"v.{s}" for s in a.labels)
    rep = None
    if a.rep is not None:
        n = a.rep.shape[1]
        rep = np.zeros((2 * d, 2 * n, 2 * n), dtype=np.complex128)
        rep[:d, :n, :n] = a.rep
        rep[:d, n:, n:] = a.rep
        rep[d:, :n, n:] = a.rep
    return StructureAlgebra(c, labels, rep)
