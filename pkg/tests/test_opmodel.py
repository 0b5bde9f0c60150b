import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jsrlab import jsr, opmodel
from jsrlab.errors import UsageError
from jsrlab.opmodel import ScalarPlusCorner as SPC
from jsrlab.sampling import unit_disc

from conftest import brute_products


def test_embed_examples():
    np.testing.assert_array_equal(opmodel.embed(SPC(2.0, np.zeros((1, 1)))), np.diag([2, 2]))
    k = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(opmodel.embed(SPC(0, k)), [[1, 2, 0], [3, 4, 0], [0, 0, 0]])
    t = SPC(0.5, [[1.5]])
    np.testing.assert_array_equal(opmodel.embed(t), np.diag([2.0, 0.5]))
    assert opmodel.operator_spectral_radius(t) == pytest.approx(2.0)
    assert opmodel.operator_norm(t) == pytest.approx(2.0)


def test_embed_pads():
    t = SPC(1j, [[1]])
    e = opmodel.embed(t, 3)
    np.testing.assert_array_equal(np.diag(e), [1 + 1j, 1j, 1j, 1j])
    with pytest.raises(UsageError):
        t.padded(3).padded(2)


def test_essential_quantities():
    assert opmodel.essential_norm(SPC(0, unit_disc(np.random.default_rng(0), (3, 3)))) == 0.0
    assert opmodel.essential_norm(SPC(3, np.zeros((1, 1)))) == 3.0
    assert opmodel.essential_norm(SPC(0.5 + 0.5j, [[7]])) == pytest.approx(0.7071067812)
    assert opmodel.essential_jsr([SPC(0, [[1]]), SPC(0, [[2]])]) == 0.0
    assert opmodel.essential_jsr([SPC(-2j, [[0]])]) == 2.0
    fam = [SPC(0.3, [[5]]), SPC(0.9, [[1, 2], [3, 4]]), SPC(0.5, [[0]])]
    assert opmodel.essential_jsr(fam) == pytest.approx(0.9)
    with pytest.raises(UsageError):
        opmodel.essential_jsr([])


def test_product_rule():
    a = SPC(2, [[1, 1], [0, 1]])
    b = SPC(-1j, [[3]])
    p = a @ b
    assert p.lam == -2j and p.n == 2
    np.testing.assert_allclose(opmodel.embed(p), opmodel.embed(a) @ opmodel.embed(b, 2))


@given(st.integers(0, 2 ** 32 - 1))
def test_embed_is_multiplicative_on_words(seed):
    rng = np.random.default_rng(seed)
    fam = opmodel.random_family(rng)
    n = max(t.n for t in fam)
    word = rng.integers(len(fam), size=int(rng.integers(1, 7)))
    prod = fam[word[0]]
    mat = opmodel.embed(fam[word[0]], n)
    for k in word[1:]:
        prod = prod @ fam[k]
        mat = mat @ opmodel.embed(fam[k], n)
    assert np.abs(opmodel.embed(prod, n) - mat).max() <= 1e-10 * max(1.0, np.abs(mat).max())
    assert opmodel.essential_norm(prod) == pytest.approx(
        np.prod([opmodel.essential_norm(fam[k]) for k in word]), rel=1e-14)


def test_embed_norm_matches_large_truncation(rng):
    # the tail acts as lambda times the identity, so a long truncation has the same norm
    t = SPC(0.7j, unit_disc(rng, (3, 3)))
    big = np.diag(np.full(20, 0.7j)).astype(complex)
    big[:3, :3] += t.K
    assert opmodel.operator_norm(t) == pytest.approx(np.linalg.norm(big, 2), rel=1e-12)
    assert opmodel.operator_spectral_radius(t) == pytest.approx(
        np.abs(np.linalg.eigvals(big)).max(), rel=1e-9)


@given(st.integers(0, 2 ** 32 - 1))
def test_essential_jsr_below_jsr(seed):
    fam = opmodel.random_family(np.random.default_rng(seed))
    e = jsr.jsr_enclosure(opmodel.embedded_set(fam), depth=8)
    assert opmodel.essential_jsr(fam) <= e.hi + 1e-9


def test_restriction_to_complement():
    t = SPC(0.4 - 0.3j, [[1, 2], [3, 4]])
    r = opmodel.restriction_to_complement(t)
    assert opmodel.essential_norm(r) == opmodel.essential_norm(t)
    assert opmodel.essential_norm(r) <= 2 * opmodel.essential_norm(t)
    assert not r.K.any()


def test_verify_operator_bw_examples():
    rep = opmodel.verify_operator_bw([SPC(0.5, np.zeros((1, 1)))], depth=8)
    assert rep.passed and rep.lhs.lo == pytest.approx(0.5) and rep.rhs_lo == pytest.approx(0.5)
    rep = opmodel.verify_operator_bw([SPC(0.5, [[1.5]])], depth=8)
    assert rep.passed
    assert rep.rho_e == 0.5
    assert rep.lhs.lo == pytest.approx(2.0) and rep.rhs_lo == pytest.approx(2.0)


def test_nilpotent_corner_family():
    fam = [SPC(0.9, [[0, 1, 2], [0, 0, 3], [0, 0, 0]]), SPC(0.9, [[0, -1, 0], [0, 0, 1j], [0, 0, 0]])]
    mats = [opmodel.embed(t) for t in fam]
    # brute-force r_n for n <= 8 confirms r(M) = 0.9
    for n in range(1, 9):
        r_n = max(np.abs(np.linalg.eigvals(p)).max() for _, p in brute_products(mats, n)) ** (1 / n)
        assert r_n == pytest.approx(0.9, rel=1e-6)
    rep = opmodel.verify_operator_bw(fam, depth=12)
    assert rep.passed
    assert rep.lhs.contains(0.9, 1e-9) and rep.lhs.width <= 1e-3
    assert rep.rho_e == pytest.approx(0.9)


def test_generators(rng):
    for _ in range(50):
        t = opmodel.random_operator(rng, 2)
        assert 0.1 <= abs(t.lam) <= 1.0 and np.abs(t.K).max() <= 1.0
    fam = opmodel.nilpotent_corner_family(rng, 3, 3)
    for t in fam:
        assert not np.tril(t.K).any()


def test_json_round_trip(rng):
    t = SPC(0.1 + 0.2j, unit_disc(rng, (2, 2)))
    back = SPC.from_json(json.loads(json.dumps(t.to_json())))
    assert back.lam == t.lam
    np.testing.assert_array_equal(back.K, t.K)
    with pytest.raises(UsageError):
        SPC.from_json({"lambda": [1, 0], "K": [[1, 2]]})
