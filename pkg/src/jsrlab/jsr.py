"""Joint spectral radius bounds and certified enclosures for finite matrix sets.

Words are tuples of member indices; the product of a word ``(i1, ..., in)``
is ``M[i1] @ ... @ M[in]``.  Enumerations run in lexicographic word order.

All set-level routines work on a copy of the members divided by a power of
two close to the largest member norm.  The rescaling is exact in binary
floating point, so it neither perturbs results nor breaks scale
equivariance, and it keeps every enumerated product bounded by one.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import matcore
from .errors import ResourceError, UsageError
from .matcore import as_cmatrix, max_spectral_radius, op_norms
from .precondition import choose_similarity

PRODUCT_BUDGET = 2_000_000
NODE_BUDGET = 5_000_000
DEFAULT_DEPTH = 12
DEFAULT_DELTA = 1e-3
DEDUP_QUANTUM = 1e-12

_CHUNK = 1 << 17
# norms below this (relative to the normalised scale) are treated as this
# value so that underflow can never produce a too-small upper bound
_TINY = 1e-250


@dataclass(frozen=True)
class MatrixSet:
    """A nonempty finite family of same-size complex matrices."""

    members: tuple
    label: str | None = None

    def __post_init__(self):
        mats = [as_cmatrix(m) for m in self.members]
        if not mats:
            raise UsageError("a matrix set needs at least one member")
        d = mats[0].shape[0]
        if any(m.shape[0] != d for m in mats):
            raise UsageError("all members of a matrix set must share one dimension")
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "members", tuple(mats))

    @property
    def dim(self) -> int:
        return self.members[0].shape[0]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def stack(self) -> np.ndarray:
        return np.stack(self.members)

    def scaled(self, c: complex) -> "MatrixSet":
        return MatrixSet(tuple(c * m for m in self.members), self.label)

    def deduplicated(self, quantum: float = DEDUP_QUANTUM) -> "MatrixSet":
        return MatrixSet(tuple(_dedup(self.stack, quantum)), self.label)

    def norm(self) -> float:
        """Set norm: the largest member spectral norm."""
        return max(matcore.op_norm(m) for m in self.members)


@dataclass(frozen=True)
class Enclosure:
    """Certified interval ``lo <= rho(M) <= hi``.

    ``lo`` is the BW-type bound ``rho(w)^(1/|w|)`` of ``lo_witness``; ``hi``
    comes from a complete cut of the pruned product tree.
    """

    lo: float
    hi: float
    lo_witness: tuple[int, ...]
    depth_reached: int
    converged: bool
    nodes: int = 0
    delta: float = DEFAULT_DELTA
    norm: str = "identity"
    budget_exhausted: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def overlaps(self, lo: float, hi: float, tol: float = 0.0) -> bool:
        return self.lo <= hi + tol and lo <= self.hi + tol

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "width": self.width,
            "lo_witness": list(self.lo_witness),
            "depth_reached": self.depth_reached,
            "converged": self.converged,
            "nodes": self.nodes,
            "delta": self.delta,
            "norm": self.norm,
            "budget_exhausted": self.budget_exhausted,
        }


def _as_set(m) -> MatrixSet:
    return m if isinstance(m, MatrixSet) else MatrixSet(tuple(m))


def _normalised(ms: MatrixSet) -> tuple[np.ndarray, float]:
    stack = ms.stack
    top = float(op_norms(stack).max())
    if top == 0.0:
        return stack, 1.0
    s = 2.0 ** math.ceil(math.log2(top))
    return stack / s, s


def _dedup(stack: np.ndarray, quantum: float) -> list[np.ndarray]:
    seen = set()
    out = []
    q = np.round(np.stack([stack.real, stack.imag], axis=-1) / quantum).astype(np.int64)
    q[q == 0] = 0
    for i in range(stack.shape[0]):
        key = q[i].tobytes()
        if key not in seen:
            seen.add(key)
            out.append(stack[i])
    return out


def _level(stack: np.ndarray, n: int) -> np.ndarray:
    """All ``m**n`` products of length ``n`` in lexicographic order."""
    d = stack.shape[1]
    prods = stack
    for _ in range(n - 1):
        prods = (prods[:, None] @ stack[None]).reshape(-1, d, d)
    return prods


def _split(m: int, n: int) -> tuple[int, int]:
    suffix = max(1, n // 2)
    while suffix < n and m ** (suffix + 1) <= 1 << 12:
        suffix += 1
    return n - suffix, suffix


def _iter_words(stack: np.ndarray, n: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_code, products)`` chunks covering all words of length n."""
    m = stack.shape[0]
    pre_len, suf_len = _split(m, n)
    suffix = _level(stack, suf_len)
    if pre_len == 0:
        yield 0, suffix
        return
    prefix = _level(stack, pre_len)
    per = max(1, _CHUNK // suffix.shape[0])
    for start in range(0, prefix.shape[0], per):
        block = prefix[start:start + per]
        prods = (block[:, None] @ suffix[None]).reshape(-1, *stack.shape[1:])
        yield start * suffix.shape[0], prods


def _decode(code: int, m: int, n: int) -> tuple[int, ...]:
    digits = []
    for _ in range(n):
        code, r = divmod(code, m)
        digits.append(int(r))
    return tuple(reversed(digits))


def word_product(ms, word: Sequence[int]) -> np.ndarray:
    ms = _as_set(ms)
    out = np.eye(ms.dim, dtype=np.complex128)
    for i in word:
        if not 0 <= i < len(ms):
            raise UsageError(f"letter {i} out of range for a set of {len(ms)} matrices")
        out = out @ ms.members[i]
    return out


def _check_budget(required: float, budget: float, what: str) -> None:
    if required > budget:
        raise ResourceError(
            f"{what} needs {required:.0f} products, over the product budget of {budget:.0f}",
            "product_budget", budget, required)


def upper_bound(ms, n: int, budget: float = PRODUCT_BUDGET) -> float:
    """``max ||w||^(1/n)`` over all words of length ``n`` (spectral norm)."""
    ms = _as_set(ms)
    if n < 1:
        raise UsageError("n must be a positive integer")
    m = len(ms)
    _check_budget(float(m) ** n, budget, f"upper_bound(n={n})")
    stack, s = _normalised(ms)
    best = 0.0
    for _, prods in _iter_words(stack, n):
        f = matcore.frobenius_norms(prods)
        cand = f > best
        if np.any(cand):
            best = max(best, float(op_norms(prods[cand]).max()))
    return max(best, _TINY) ** (1.0 / n) * s if best > 0 else 0.0


def necklace_count(m: int, n: int) -> int:
    """Number of rotation classes of words of length n over m letters."""
    total = 0
    for k in range(1, n + 1):
        if n % k == 0:
            phi = sum(1 for j in range(1, k + 1) if math.gcd(j, k) == 1)
            total += phi * m ** (n // k)
    return total // n


@functools.lru_cache(maxsize=64)
def _necklace_codes(m: int, n: int) -> np.ndarray:
    """Least codes of all rotation classes, ascending; read-only and cached."""
    total = m ** n
    dtype = np.int32 if total < 2 ** 31 else np.int64
    top = m ** (n - 1)
    parts = []
    for lo in range(0, total, _CHUNK * 8):
        codes = np.arange(lo, min(total, lo + _CHUNK * 8), dtype=dtype)
        best = codes.copy()
        rot = codes
        for _ in range(n - 1):
            q, r = np.divmod(rot, top)
            rot = r * m + q
            np.minimum(best, rot, out=best)
        parts.append(codes[best == codes])
    out = np.concatenate(parts)
    out.setflags(write=False)
    return out


def _rn_scan(stack: np.ndarray, n: int, floor: float) -> tuple[float, int]:
    """Max spectral radius over words of length n, one word per rotation class.

    rho is invariant under cyclic rotation and the lexicographically smallest
    member of a class is its least code, so scanning class representatives in
    code order still returns the lexicographically first maximiser.
    """
    m = stack.shape[0]
    pre_len, suf_len = _split(m, n)
    suffix = _level(stack, suf_len)
    prefix = _level(stack, pre_len) if pre_len else None
    base = m ** suf_len
    best, best_code = -1.0, -1
    codes = _necklace_codes(m, n)
    for i in range(0, codes.size, _CHUNK):
        c = codes[i:i + _CHUNK]
        if prefix is None:
            prods = suffix[c]
        else:
            prods = prefix[c // base] @ suffix[c % base]
        val, idx = max_spectral_radius(prods, floor=max(floor, best))
        if idx >= 0 and val > best * (1 + 1e-12):
            best, best_code = val, int(c[idx])
    return best, best_code


def lower_bound_bw(ms, n: int, budget: float = PRODUCT_BUDGET) -> tuple[float, tuple[int, ...]]:
    """``r_n(M) = max rho(w)^(1/n)`` over words of length n, with an argmax word.

    The witness is the lexicographically first maximiser.  Only one word per
    rotation class is evaluated, so the budget counts rotation classes.
    """
    ms = _as_set(ms)
    if n < 1:
        raise UsageError("n must be a positive integer")
    m = len(ms)
    _check_budget(necklace_count(m, n), budget, f"lower_bound_bw(n={n})")
    _check_budget(float(m) ** n, 64 * budget, f"lower_bound_bw(n={n}) word indexing")
    stack, s = _normalised(ms)
    best, code = _rn_scan(stack, n, 0.0)
    word = _decode(code, m, n)
    return (witness_rate(ms, word) if best > 0 else 0.0), word


def bw_radius_estimate(ms, n_max: int, budget: float = PRODUCT_BUDGET) -> float:
    """``max_{n <= n_max} r_n(M)``, the finite-depth estimate of the BW-radius."""
    return bw_radius_scan(ms, n_max, budget)[0]


def bw_radius_scan(ms, n_max: int, budget: float = PRODUCT_BUDGET) -> tuple[float, tuple[int, ...]]:
    """Like :func:`bw_radius_estimate` but also returns a maximising word.

    Each length is scanned with a floor equal to the best rate found at
    shorter lengths, so only words that can improve the estimate are refined.
    """
    ms = _as_set(ms)
    if n_max < 1:
        raise UsageError("n_max must be a positive integer")
    m = len(ms)
    for n in range(1, n_max + 1):
        _check_budget(necklace_count(m, n), budget, f"bw_radius_estimate(n={n})")
        _check_budget(float(m) ** n, 64 * budget, f"bw_radius_estimate(n={n}) word indexing")
    stack, s = _normalised(ms)
    rate, witness = 0.0, (0,)
    for n in range(1, n_max + 1):
        floor = rate ** n * (1 + 1e-12) if rate > 0 else 0.0
        val, code = _rn_scan(stack, n, floor)
        if code >= 0 and val ** (1.0 / n) > rate * (1 + 1e-12):
            rate, witness = val ** (1.0 / n), _decode(code, m, n)
    return (witness_rate(ms, witness) if rate > 0 else 0.0), witness


def jsr_enclosure(ms, depth: int = DEFAULT_DEPTH, delta: float = DEFAULT_DELTA,
                  node_budget: float = NODE_BUDGET, precondition: bool = True) -> Enclosure:
    """Branch-and-bound enclosure of the joint spectral radius.

    The tree of words is explored level by level.  A node is pruned once its
    norm rate ``||w||^(1/|w|)`` is at most ``lo + delta``; pruned nodes are
    leaves.  For every level k, the pruned leaves so far together with the
    surviving nodes at level k form a cut of the tree, so the largest rate on
    that cut bounds the JSR from above; ``hi`` is the best such cut.  ``lo``
    is the best ``rho(w)^(1/|w|)`` over every explored node.

    The norm is the spectral norm after a similarity chosen by
    :func:`jsrlab.precondition.choose_similarity`.  When the node budget runs
    out the enclosure is returned with ``converged=False``; it stays valid.
    """
    ms = _as_set(ms)
    if depth < 1:
        raise UsageError("depth must be at least 1")
    if not delta > 0:
        raise UsageError("delta must be positive")
    stack, s = _normalised(ms)
    m, d = stack.shape[0], stack.shape[1]
    sim = choose_similarity(stack) if precondition else None
    gens = sim.apply(stack) if sim is not None else stack
    dn = delta / s

    lo, lo_word = 0.0, (0,)
    hi = np.inf
    hi_pruned = 0.0
    nodes = 0
    depth_reached = 0
    exhausted = False
    parents = None  # products of surviving nodes at the previous level
    parent_words = np.zeros((1, 0), dtype=np.int16)

    for k in range(1, depth + 1):
        count = m if parents is None else parents.shape[0] * m
        if nodes + count > node_budget:
            exhausted = True
            break
        nodes += count
        final = k == depth
        kept_prods, kept_words = [], []
        level_max = 0.0
        for prods, words in _children(parents, parent_words, gens):
            val, idx = max_spectral_radius(prods, floor=lo ** k)
            if idx >= 0 and val ** (1.0 / k) > lo * (1 + 1e-12):
                lo, lo_word = val ** (1.0 / k), tuple(int(w) for w in words[idx])
            rates = np.maximum(op_norms(prods), _TINY) ** (1.0 / k)
            pruned = rates <= lo + dn
            if np.any(pruned):
                hi_pruned = max(hi_pruned, float(rates[pruned].max()))
            keep = ~pruned
            if np.any(keep):
                level_max = max(level_max, float(rates[keep].max()))
                if not final:
                    kept_prods.append(prods[keep])
                    kept_words.append(words[keep])
        depth_reached = k
        hi = min(hi, max(hi_pruned, level_max))
        if level_max == 0.0 or final:
            break
        parents = np.concatenate(kept_prods)
        parent_words = np.concatenate(kept_words)

    if not np.isfinite(hi):
        # not even the first level fit the budget; fall back to member norms
        hi = float(op_norms(gens).max())
    hi = hi * s
    lo = witness_rate(ms, lo_word) if lo > 0 else 0.0
    if lo > hi * (1 + 1e-9) + 1e-300:
        raise RuntimeError(f"internal error: enclosure lo={lo!r} exceeds hi={hi!r}")
    lo = min(lo, hi)
    return Enclosure(
        lo=lo, hi=hi, lo_witness=lo_word, depth_reached=depth_reached,
        converged=bool(hi - lo <= delta), nodes=int(nodes), delta=delta,
        norm=sim.label if sim is not None else "identity", budget_exhausted=exhausted)


def witness_rate(ms, word) -> float:
    """Lower estimate of ``rho(w)^(1/|w|)`` for a word: the Gelfand value
    minus its error estimate, so rounding never lifts it above the true rate."""
    info = matcore.spectral_radius_info(word_product(ms, word))
    return max(info.value - info.error, 0.0) ** (1.0 / len(word))


def _children(parents, parent_words, gens) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    m, d = gens.shape[0], gens.shape[1]
    letters = np.arange(m, dtype=np.int16)
    if parents is None:
        yield gens, letters[:, None]
        return
    per = max(1, _CHUNK // m)
    for start in range(0, parents.shape[0], per):
        block = parents[start:start + per]
        words = parent_words[start:start + per]
        prods = (block[:, None] @ gens[None]).reshape(-1, d, d)
        w = np.concatenate([np.repeat(words, m, axis=0),
                            np.tile(letters, block.shape[0])[:, None]], axis=1)
        yield prods, w


def power_set(ms, m: int, budget: float = PRODUCT_BUDGET) -> MatrixSet:
    """All products of length ``m``, deduplicated entrywise at ``1e-12``."""
    ms = _as_set(ms)
    if m < 1:
        raise UsageError("m must be a positive integer")
    _check_budget(float(len(ms)) ** m, budget, f"power_set(m={m})")
    prods = _level(ms.stack, m)
    label = f"{ms.label}^{m}" if ms.label else None
    return MatrixSet(tuple(_dedup(prods, DEDUP_QUANTUM)), label)


def mult_operator_set(ms, cap: int = matcore.KRON_CAP) -> MatrixSet:
    """Matrices of ``X -> A X B`` for ``A, B`` in the set: ``kron(B.T, A)``."""
    ms = _as_set(ms)
    mats = [matcore.kron(b.T, a, cap=cap) for a in ms.members for b in ms.members]
    label = f"L{ms.label}R{ms.label}" if ms.label else None
    return MatrixSet(tuple(_dedup(np.stack(mats), DEDUP_QUANTUM)), label)


def abs_hull_sample(ms, k: int, seed: int) -> MatrixSet:
    """Append ``k`` random absolutely convex combinations ``sum c_i M_i``, ``sum |c_i| <= 1``."""
    ms = _as_set(ms)
    if k < 0:
        raise UsageError("k must be nonnegative")
    if k == 0:
        return ms
    rng = np.random.default_rng(seed)
    stack = ms.stack
    extra = []
    for _ in range(k):
        w = rng.dirichlet(np.ones(len(ms))) * rng.uniform()
        c = w * np.exp(2j * np.pi * rng.uniform(size=len(ms)))
        extra.append(np.tensordot(c, stack, axes=1))
    return MatrixSet(ms.members + tuple(extra), ms.label)
