import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jsrlab import jsr
from jsrlab.errors import ResourceError, UsageError
from jsrlab.jsr import Enclosure, MatrixSet
from jsrlab.sampling import random_matrices, unit_disc

from conftest import brute_products

PHI = 1.6180339887498949  # sqrt((3 + sqrt 5) / 2), frozen from eigvals of [[2,1],[1,1]]
A = np.array([[1, 1], [0, 1]], dtype=complex)
B = np.array([[1, 0], [1, 1]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = E12.T.copy()


def brute_upper(mats, n):
    return max(np.linalg.svd(p, compute_uv=False)[0] for _, p in brute_products(mats, n)) ** (1 / n)


def brute_rn(mats, n):
    vals = [(np.abs(np.linalg.eigvals(p)).max() ** (1 / n), w) for w, p in brute_products(mats, n)]
    return vals


def test_phi_oracle():
    assert np.sqrt(np.abs(np.linalg.eigvals(A @ B)).max()) == pytest.approx(PHI, rel=1e-15)


def test_matrix_set_validation():
    with pytest.raises(UsageError):
        MatrixSet(())
    with pytest.raises(UsageError):
        MatrixSet((np.eye(2), np.eye(3)))
    with pytest.raises(UsageError):
        MatrixSet((np.zeros((2, 3)),))
    ms = MatrixSet((A, B), "F")
    assert len(ms) == 2 and ms.dim == 2 and ms.stack.shape == (2, 2, 2)
    with pytest.raises(ValueError):
        ms.members[0][0, 0] = 5


def test_matrix_set_helpers():
    ms = MatrixSet((A, A.copy(), B))
    assert len(ms.deduplicated()) == 2
    assert ms.norm() == pytest.approx(PHI)
    np.testing.assert_allclose(ms.scaled(2j).members[1], 2j * A)


def test_word_product():
    np.testing.assert_array_equal(jsr.word_product([A, B], (0, 1)), A @ B)
    np.testing.assert_array_equal(jsr.word_product([A, B], ()), np.eye(2))
    with pytest.raises(UsageError):
        jsr.word_product([A, B], (2,))


def test_upper_bound_fibonacci_pair():
    # all four length-2 products: ||AB|| = phi^2 is the largest
    assert brute_upper([A, B], 2) == pytest.approx(PHI, rel=1e-14)
    assert jsr.upper_bound([A, B], 2) == pytest.approx(PHI, rel=1e-11)
    assert jsr.upper_bound([A, B], 2) >= PHI


def test_upper_bound_matches_brute_force(rng):
    for _ in range(15):
        mats = random_matrices(rng, 3, 3)
        for n in (1, 2, 3, 5):
            got = jsr.upper_bound(mats, n)
            ref = brute_upper(mats, n)
            assert got >= ref * (1 - 1e-13)
            assert got == pytest.approx(ref, rel=1e-10)


def test_upper_bound_errors():
    with pytest.raises(UsageError):
        jsr.upper_bound([A], 0)
    with pytest.raises(ResourceError) as info:
        jsr.upper_bound([A, B, A, B], 12, budget=1000)
    assert info.value.limit_name == "product_budget"
    assert info.value.required == 4 ** 12


def test_lower_bound_bw_matches_brute_force(rng):
    for _ in range(15):
        mats = random_matrices(rng, 3, 3)
        for n in (1, 2, 3, 4, 6):
            rate, word = jsr.lower_bound_bw(mats, n)
            vals = brute_rn(mats, n)
            best = max(v for v, _ in vals)
            assert rate == pytest.approx(best, rel=1e-9, abs=1e-12)
            # witness is the lexicographically first maximiser
            first = next(w for v, w in vals if v >= best * (1 - 1e-9))
            assert word == first


def test_lower_bound_bw_examples():
    rate, word = jsr.lower_bound_bw([E12, E21], 2)
    assert rate == pytest.approx(1.0, rel=1e-12) and word == (0, 1)
    rate, word = jsr.lower_bound_bw([A, B], 2)
    assert rate == pytest.approx(PHI, rel=1e-12) and word == (0, 1)
    assert jsr.lower_bound_bw([E12], 3) == (0.0, (0, 0, 0))


def test_necklace_count_against_enumeration():
    for m in (1, 2, 3):
        for n in range(1, 8):
            classes = {min(w[i:] + w[:i] for i in range(n))
                       for w in itertools.product(range(m), repeat=n)}
            assert jsr.necklace_count(m, n) == len(classes)


def test_bw_radius_estimate(rng):
    for _ in range(10):
        mats = random_matrices(rng, 3, 2)
        est = jsr.bw_radius_estimate(mats, 6)
        ref = max(max(v for v, _ in brute_rn(mats, n)) for n in range(1, 7))
        assert est == pytest.approx(ref, rel=1e-9, abs=1e-12)
    rate, word = jsr.bw_radius_scan([A, B], 6)
    assert rate == pytest.approx(PHI) and word == (0, 1)


def test_enclosure_fibonacci_pair():
    e = jsr.jsr_enclosure([A, B], depth=14, delta=0.02)
    assert e.lo <= PHI <= e.hi
    assert e.width <= 0.02 and e.converged
    assert e.lo_witness == (0, 1)


def test_enclosure_matrix_units():
    e = jsr.jsr_enclosure([E12, E21], depth=8)
    assert e.lo == pytest.approx(1.0, abs=1e-12) and e.hi == pytest.approx(1.0, abs=1e-9)


def test_enclosure_scalar_and_nilpotent():
    e = jsr.jsr_enclosure([3j * np.eye(2)])
    assert e.lo == pytest.approx(3.0, rel=1e-12) and e.hi == pytest.approx(3.0, rel=1e-11)
    assert e.lo <= 3.0 * (1 + 1e-14)
    n = jsr.jsr_enclosure([E12])
    assert n.lo == 0.0 and n.hi <= 1e-9


def test_enclosure_brackets_brute_force(rng):
    for _ in range(25):
        mats = random_matrices(rng, 3, 3)
        e = jsr.jsr_enclosure(mats, depth=10)
        r_lo = max(max(v for v, _ in brute_rn(mats, n)) for n in range(1, 6))
        u_hi = min(brute_upper(mats, n) for n in range(1, 6))
        assert e.lo <= e.hi
        assert e.lo <= u_hi * (1 + 1e-12)
        assert r_lo <= e.hi * (1 + 1e-12)
        w = jsr.word_product(mats, e.lo_witness)
        true_rate = np.abs(np.linalg.eigvals(w)).max() ** (1 / len(e.lo_witness))
        assert e.lo == pytest.approx(true_rate, rel=1e-9, abs=1e-12)


def test_enclosure_triangular_family_tight(rng):
    mats = [np.triu(unit_disc(rng, (3, 3))) for _ in range(3)]
    r1 = max(np.abs(np.diag(m)).max() for m in mats)
    e = jsr.jsr_enclosure(mats, depth=12)
    assert e.lo >= r1 - 1e-9 and e.hi - r1 <= 0.02


def test_enclosure_without_preconditioning_is_valid(rng):
    mats = [np.triu(unit_disc(rng, (3, 3))) for _ in range(2)]
    plain = jsr.jsr_enclosure(mats, depth=8, precondition=False)
    pre = jsr.jsr_enclosure(mats, depth=8)
    assert plain.norm == "identity"
    assert plain.overlaps(pre.lo, pre.hi)


def test_enclosure_budget_exhaustion_still_valid(rng):
    mats = random_matrices(np.random.default_rng(7), 3, 3)  # needs ~1400 nodes at depth 12
    e = jsr.jsr_enclosure(mats, depth=14, delta=1e-9, node_budget=50)
    full = jsr.jsr_enclosure(mats, depth=12)
    assert e.budget_exhausted
    assert e.lo <= full.hi + 1e-12 and full.lo <= e.hi + 1e-12


def test_enclosure_argument_errors():
    with pytest.raises(UsageError):
        jsr.jsr_enclosure([A], depth=0)
    with pytest.raises(UsageError):
        jsr.jsr_enclosure([A], delta=0)


def test_enclosure_helpers():
    e = Enclosure(lo=1.0, hi=2.0, lo_witness=(0,), depth_reached=3, converged=False)
    assert e.width == 1.0 and e.contains(1.5) and not e.contains(2.5)
    assert e.overlaps(1.9, 3.0) and not e.overlaps(2.1, 3.0)
    assert e.overlaps(2.1, 3.0, tol=0.2)
    d = e.to_dict()
    assert d["lo"] == 1.0 and d["lo_witness"] == [0]


def test_power_set():
    p = jsr.power_set([A, B], 2)
    assert len(p) == 4
    # duplicates collapse: I*I = I
    assert len(jsr.power_set([np.eye(2), np.eye(2)], 3)) == 1
    assert len(jsr.power_set([E12, E21], 2)) == 3  # E12 E12 = E21 E21 = 0
    with pytest.raises(ResourceError):
        jsr.power_set([A, B], 30)


def test_mult_operator_set_acts_as_two_sided_multiplication(rng):
    mats = random_matrices(rng, 2, 2)
    ops = jsr.mult_operator_set(mats)
    x = unit_disc(rng, mats[0].shape)
    vec = x.reshape(-1, order="F")
    images = {tuple(np.round((op @ vec), 12)) for op in ops.members}
    expected = {tuple(np.round((a @ x @ b).reshape(-1, order="F"), 12)) for a in mats for b in mats}
    assert images == expected
    with pytest.raises(UsageError):
        jsr.mult_operator_set([np.eye(5)], cap=16)


def test_abs_hull_sample():
    ms = MatrixSet((A, B))
    h1 = jsr.abs_hull_sample(ms, 4, seed=9)
    h2 = jsr.abs_hull_sample(ms, 4, seed=9)
    assert len(h1) == 6
    for x, y in zip(h1.members, h2.members):
        np.testing.assert_array_equal(x, y)
    assert jsr.abs_hull_sample(ms, 0, seed=1) is ms
    with pytest.raises(UsageError):
        jsr.abs_hull_sample(ms, -1, seed=1)


seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.sampled_from([2.0, 0.5, 1j, -0.25, 1e3]))
def test_scale_equivariance(seed, c):
    mats = random_matrices(np.random.default_rng(seed), 3, 3)
    ms = MatrixSet(tuple(mats))
    base = jsr.jsr_enclosure(ms, depth=6)
    scaled = jsr.jsr_enclosure(ms.scaled(c), depth=6, delta=jsr.DEFAULT_DELTA * abs(c))
    assert scaled.lo == pytest.approx(abs(c) * base.lo, rel=1e-12, abs=1e-300)
    assert scaled.hi == pytest.approx(abs(c) * base.hi, rel=1e-12, abs=1e-300)
    assert jsr.upper_bound(ms.scaled(c), 3) == pytest.approx(abs(c) * jsr.upper_bound(ms, 3), rel=1e-12)


@given(seeds)
def test_enclosure_invariant_under_member_order_and_similarity(seed):
    rng = np.random.default_rng(seed)
    mats = random_matrices(rng, 3, 3)
    d = mats[0].shape[0]
    t = np.eye(d) + 0.3 * unit_disc(rng, (d, d))
    ti = np.linalg.inv(t)
    e = jsr.jsr_enclosure(mats, depth=8)
    rev = jsr.jsr_enclosure(mats[::-1], depth=8)
    sim = jsr.jsr_enclosure([ti @ m @ t for m in mats], depth=8)
    tol = 1e-9 * max(e.hi, 1e-12)
    assert rev.overlaps(e.lo, e.hi, tol) and sim.overlaps(e.lo, e.hi, tol)


@given(seeds)
def test_adding_a_member_does_not_lower_the_jsr(seed):
    rng = np.random.default_rng(seed)
    mats = random_matrices(rng, 3, 2)
    extra = unit_disc(rng, mats[0].shape)
    e = jsr.jsr_enclosure(mats, depth=8)
    bigger = jsr.jsr_enclosure(mats + [extra], depth=8)
    assert bigger.hi >= e.lo * (1 - 1e-12)


@given(seeds)
def test_bounds_sandwich(seed):
    mats = random_matrices(np.random.default_rng(seed), 3, 3)
    e = jsr.jsr_enclosure(mats, depth=8)
    for n in (1, 2, 3):
        assert jsr.lower_bound_bw(mats, n)[0] <= e.hi * (1 + 1e-12)
        assert e.lo <= jsr.upper_bound(mats, n) * (1 + 1e-12)


def test_kronecker_set_of_fibonacci_pair():
    e = jsr.jsr_enclosure(jsr.mult_operator_set([A, B]), depth=10, delta=0.02)
    assert e.contains(PHI ** 2)


@given(seeds)
def test_upper_bound_monotone_under_doubling(seed):
    mats = random_matrices(np.random.default_rng(seed), 3, 2)
    for n in (1, 2, 3):
        assert jsr.upper_bound(mats, 2 * n) <= jsr.upper_bound(mats, n) + 1e-9


@given(seeds)
def test_power_set_endpoints(seed):
    mats = random_matrices(np.random.default_rng(seed), 2, 2)
    e = jsr.jsr_enclosure(mats, depth=12)
    p = jsr.jsr_enclosure(jsr.power_set(mats, 2), depth=12)
    # rho(M^2) = rho(M)^2: both enclosures bracket the same number
    assert p.overlaps(e.lo ** 2, e.hi ** 2, 1e-9)
