"""Similarity preconditioning for norm-based JSR upper bounds.

The joint spectral radius is invariant under a common similarity, while the
rate at which ``||w||^(1/n)`` approaches it is not.  For families with a
common invariant flag (triangularisable sets, regular representations of
algebras with a radical) the spectral norm converges badly: off-diagonal
blocks add polynomial factors.  Here the flag is computed from the Jacobson
radical of the unital matrix algebra generated by the family, using the trace
form ``tr(XY)`` of the natural representation.  A unitary change to an adapted
basis plus a geometric block scaling then shrinks the off-diagonal blocks.

Any invertible similarity gives a valid operator norm, so the choice made
here affects only tightness, never soundness.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import op_norms

_RANK_RTOL = 1e-10
_RAD_RTOL = 1e-8
_SCALES = (0.3, 0.1, 0.03, 0.01, 1e-3, 1e-4)
_SCORE_WORDS = 4096
_MAX_COND = 1e6


@dataclass(frozen=True)
class Similarity:
    forward: np.ndarray  # T; members are mapped to T^{-1} X T
    inverse: np.ndarray
    label: str

    def apply(self, stack: np.ndarray) -> np.ndarray:
        return self.inverse @ stack @ self.forward


def _orth_rows(rows: np.ndarray, rtol: float = _RANK_RTOL) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return rows[:0]
    r = int(np.sum(s > rtol * s[0]))
    return vh[:r]


def generated_algebra(stack: np.ndarray) -> np.ndarray:
    """Orthonormal basis ``(r, d, d)`` of the unital algebra generated by a stack."""
    m, d = stack.shape[0], stack.shape[1]
    scale = np.max(np.abs(stack)) or 1.0
    gens = stack / scale
    basis = _orth_rows(np.concatenate([np.eye(d)[None], gens]).reshape(-1, d * d))
    while True:
        mats = basis.reshape(-1, d, d)
        prods = (mats[:, None] @ gens[None]).reshape(-1, d * d)
        grown = _orth_rows(np.concatenate([basis, prods]))
        if grown.shape[0] == basis.shape[0]:
            return grown.reshape(-1, d, d)
        basis = grown


def matrix_radical(alg: np.ndarray) -> np.ndarray | None:
    """Radical of a unital matrix algebra as the kernel of ``(X, Y) -> tr(XY)``.

    Returns ``None`` when the rank decision is ambiguous.
    """
    r = alg.shape[0]
    gram = np.einsum("iab,jba->ij", alg, alg)
    _, s, vh = np.linalg.svd(gram)
    if s[0] == 0:
        return alg
    rel = s / s[0]
    if np.any((rel > 1e-12) & (rel < 1e-5)):
        return None
    null = vh[rel <= _RAD_RTOL].conj()
    return np.einsum("ki,iab->kab", null, alg) if null.shape[0] else alg[:0]


def radical_flag(stack: np.ndarray) -> list[np.ndarray] | None:
    """Orthonormal layer bases (deepest invariant layer first), or ``None``."""
    d = stack.shape[1]
    rad = matrix_radical(generated_algebra(stack))
    if rad is None or rad.shape[0] == 0:
        return None
    chain = [np.eye(d, dtype=np.complex128)]  # column bases of W_0 ⊃ W_1 ⊃ ...
    while True:
        w = chain[-1]
        img = np.concatenate([x @ w for x in rad], axis=1)
        # rad has orthonormal rows, so an absolute cutoff is meaningful
        if not img.size or np.abs(img).max() <= 1e-10:
            break
        cols = _orth_rows(img.T).T
        if cols.shape[1] == 0:
            break
        if cols.shape[1] >= w.shape[1]:
            return None
        chain.append(cols)
    layers = [chain[-1]]
    for k in range(len(chain) - 2, -1, -1):
        inner = chain[k + 1]
        resid = chain[k] - inner @ (inner.conj().T @ chain[k])
        comp = _orth_rows(resid.T).T
        if comp.shape[1] != chain[k].shape[1] - inner.shape[1]:
            return None
        layers.append(comp)
    return layers


def _diagonalise_blocks(stack: np.ndarray, layers: list[np.ndarray]) -> np.ndarray | None:
    """Column basis adapted to ``layers`` that also diagonalises each diagonal
    block, when the blocks of all members commute and are diagonalisable.

    Returns ``None`` if no layer could be diagonalised.
    """
    t = np.concatenate(layers, axis=1)
    b = t.conj().T @ stack @ t
    rng = np.random.default_rng(0)  # fixed generic combination, deterministic
    blocks = []
    start = 0
    changed = False
    for q in layers:
        k = q.shape[1]
        sub = b[:, start:start + k, start:start + k]
        start += k
        v = np.eye(k, dtype=np.complex128)
        if k > 1:
            coeffs = rng.normal(size=sub.shape[0]) + 1j * rng.normal(size=sub.shape[0])
            _, vecs = np.linalg.eig(np.tensordot(coeffs, sub, axes=1))
            vecs = vecs / np.linalg.norm(vecs, axis=0)
            if np.linalg.cond(vecs) < _MAX_COND:
                diag = np.linalg.solve(vecs, sub @ vecs)
                off = diag - diag * np.eye(k)
                scale = max(float(np.abs(sub).max()), 1e-300)
                if np.abs(off).max() <= 1e-9 * scale * np.linalg.cond(vecs):
                    v, changed = vecs, True
        blocks.append(v)
    if not changed:
        return None
    full = np.zeros_like(t)
    start = 0
    for v in blocks:
        k = v.shape[0]
        full[start:start + k, start:start + k] = v
        start += k
    return t @ full


def _flag_similarity(basis: np.ndarray, sizes: list[int], eps: float, label: str) -> Similarity:
    scale = np.concatenate([np.full(k, eps ** i) for i, k in enumerate(sizes)])
    forward = basis * scale[None, :]
    inverse = np.linalg.inv(basis) / scale[:, None]
    return Similarity(forward, inverse, f"{label}(layers={len(sizes)}, eps={eps:g})")


def _score(stack: np.ndarray) -> float:
    m = stack.shape[0]
    best = np.inf
    prods = stack
    n = 1
    while True:
        best = min(best, float(op_norms(prods).max()) ** (1.0 / n))
        if prods.shape[0] * m > _SCORE_WORDS or n >= 4:
            return best
        prods = (prods[:, None] @ stack[None]).reshape(-1, *stack.shape[1:])
        n += 1


def choose_similarity(stack: np.ndarray) -> Similarity:
    """Pick the candidate similarity with the smallest short-word norm bound."""
    d = stack.shape[1]
    eye = np.eye(d, dtype=np.complex128)
    best = Similarity(eye, eye, "identity")
    if d == 1:
        return best
    layers = radical_flag(stack) or [eye]
    sizes = [q.shape[1] for q in layers]
    bases = []
    if len(layers) >= 2:
        bases.append((np.concatenate(layers, axis=1), "flag"))
    diag = _diagonalise_blocks(stack, layers)
    if diag is not None:
        bases.append((diag, "flag+diag" if len(layers) >= 2 else "diag"))
    best_score = _score(stack)
    for basis, label in bases:
        for eps in (_SCALES if len(layers) >= 2 else (1.0,)):
            cand = _flag_similarity(basis, sizes, eps, label)
            sc = _score(cand.apply(stack))
            if sc < best_score * (1 - 1e-9):
                best, best_score = cand, sc
    return best
