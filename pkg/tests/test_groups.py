"""Group normal forms, permutation models, and defect statistics."""

import numpy as np
import pytest

import soficrank as sr
from soficrank.groups import FINITE_QUOTIENT, FOLNER


def test_mul_abelian():
    G = sr.GroupSpec.free_abelian(2)
    g = G.element_abelian([1, 0])
    h = G.element_abelian([0, 1])
    assert sr.mul(g, h).key == (1, 1)


def test_mul_free_cancellation():
    F = sr.GroupSpec.free(2)
    a = F.generator("a")
    assert sr.mul(a, a.inverse()).is_identity()


def test_mul_free_word_reduction():
    # (ab)(b^-1 a) reduces to a^2 by hand
    F = sr.GroupSpec.free(2)
    a, b = F.generator("a"), F.generator("b")
    lhs = sr.mul(sr.mul(a, b), sr.mul(b.inverse(), a))
    assert lhs == sr.mul(a, a)


def test_mul_rejects_mixed_groups():
    G = sr.GroupSpec.free_abelian(1)
    F = sr.GroupSpec.free(1)
    with pytest.raises(sr.GroupError):
        sr.mul(G.identity(), F.identity())


def test_normal_form_properties_random():
    """Associativity and two-sided inverses on random words."""
    rng = np.random.default_rng(0)
    F = sr.GroupSpec.free(2)
    gens = [F.generator("a"), F.generator("b")]

    def random_elt():
        g = F.identity()
        for _ in range(int(rng.integers(0, 6))):
            pick = gens[int(rng.integers(0, 2))]
            if rng.integers(0, 2):
                pick = pick.inverse()
            g = sr.mul(g, pick)
        return g

    for _ in range(50):
        g, h, k = random_elt(), random_elt(), random_elt()
        assert sr.mul(sr.mul(g, h), k) == sr.mul(g, sr.mul(h, k))
        assert sr.mul(g, g.inverse()).is_identity()
        assert sr.mul(g.inverse(), g).is_identity()
        assert g.inverse().inverse() == g
        assert sr.mul(F.identity(), g) == g


def test_finite_group_table():
    # Z/3 as a table
    table = [[(i + j) % 3 for j in range(3)] for i in range(3)]
    G = sr.GroupSpec.finite(table)
    g1 = G.generator(G.generators[0])
    assert sr.mul(g1, sr.mul(g1, g1)).is_identity()


def test_finite_table_rejects_non_associative():
    bad = [[0, 1], [1, 1]]
    with pytest.raises(sr.GroupError):
        sr.GroupSpec.finite(bad)


def test_product_group():
    Z = sr.GroupSpec.free_abelian(1)
    C2 = sr.GroupSpec.finite([[0, 1], [1, 0]], labels=["s"])
    P = sr.GroupSpec.product([Z, C2])
    x, s = P.generator("x"), P.generator("s")
    assert sr.mul(s, s).is_identity()
    assert sr.mul(x, s) == sr.mul(s, x)  # product factors commute with each other


def test_sofic_permutation_cyclic_shift():
    G = sr.GroupSpec.free_abelian(1)
    level = sr.quotient_chain(G, [4])[0]
    perm = sr.sofic_permutation(level, G.generator("x"))
    assert perm.tolist() == [1, 2, 3, 0]


def test_sofic_permutation_identity():
    G = sr.GroupSpec.free_abelian(1)
    for level in sr.quotient_chain(G, [4, 8]):
        perm = sr.sofic_permutation(level, G.identity())
        assert perm.tolist() == list(range(level.degree))


def test_folner_box_translation():
    """On the 3x3 box, shifting by (1, 0) translates 6 of 9 points."""
    G = sr.GroupSpec.free_abelian(2)
    level = sr.folner_levels(G, [3])[0]
    g = G.element_abelian([1, 0])
    perm = sr.sofic_permutation(level, g)
    assert sorted(perm.tolist()) == list(range(9))
    coords = np.indices((3, 3)).reshape(2, -1)
    translated = 0
    for k in range(9):
        tx, ty = coords[0][k] + 1, coords[1][k]
        if tx < 3 and perm[k] == np.ravel_multi_index((tx, ty), (3, 3)):
            translated += 1
    assert translated == 6


def test_defect_statistics_exact_quotient():
    G = sr.GroupSpec.free_abelian(2)
    level = sr.quotient_chain(G, [5])[0]
    g = G.element_abelian([1, 2])
    h = G.element_abelian([3, 1])
    rep = sr.defect_statistics(level, [(g, h), (g, g)])
    assert all(frac == 1.0 for _, _, frac in rep.multiplicativity)
    assert rep.separation[0][2] == 1.0


def test_defect_statistics_folner_bound():
    """Boundary counting: defect of (g, h) at side N is at most
    (|g| + |h| + |gh|) * d / N."""
    G = sr.GroupSpec.free_abelian(2)
    N = 8
    level = sr.folner_levels(G, [N])[0]
    g = G.element_abelian([1, 0])
    h = G.element_abelian([0, 1])
    gh_norm = 1
    rep = sr.defect_statistics(level, [(g, h)])
    frac = rep.multiplicativity[0][2]
    assert frac >= 1.0 - (1 + 1 + gh_norm) * 2 / N
    # the 1-d interval with the order-preserving completion is exactly cyclic
    Z = sr.GroupSpec.free_abelian(1)
    zlevel = sr.folner_levels(Z, [16])[0]
    one = Z.element_abelian([1])
    zrep = sr.defect_statistics(zlevel, [(one, one)])
    assert zrep.multiplicativity[0][2] >= 1.0 - 2 / 16


def test_quotient_chain_z_degrees():
    G = sr.GroupSpec.free_abelian(1)
    chain = sr.quotient_chain(G, [4, 8, 16])
    assert [lv.degree for lv in chain] == [4, 8, 16]
    assert all(lv.provenance == FINITE_QUOTIENT for lv in chain)


def test_quotient_chain_z2_commuting():
    G = sr.GroupSpec.free_abelian(2)
    lv = sr.quotient_chain(G, [3])[0]
    assert lv.degree == 9
    p1, p2 = lv.perms["x1"], lv.perms["x2"]
    assert np.array_equal(p1[p2], p2[p1])


def test_quotient_chain_rejects_nonincreasing():
    G = sr.GroupSpec.free_abelian(1)
    with pytest.raises(sr.GroupError):
        sr.quotient_chain(G, [8, 8])


def test_free_user_table():
    F = sr.GroupSpec.free(2)
    tabs = [[1, 2, 3, 4, 0], [0, 2, 1, 4, 3]]
    level = sr.quotient_chain(F, [], tables=[tabs])[0]
    assert level.degree == 5
    a, b = F.generator("a"), F.generator("b")
    rep = sr.defect_statistics(level, [(a, b), (b, a)])
    assert all(frac == 1.0 for _, _, frac in rep.multiplicativity)


def test_free_user_table_rejects_non_permutation():
    F = sr.GroupSpec.free(2)
    with pytest.raises(sr.GroupError):
        sr.quotient_chain(F, [], tables=[[[0, 0, 1], [1, 2, 0]]])


def test_free_catalogs():
    F = sr.GroupSpec.free(2)
    rand = sr.quotient_chain(F, [32], catalog="random_transitive", seed=5)[0]
    assert sr.orbit_count(list(rand.perms.values()), 32) == 1
    cyc = sr.quotient_chain(F, [7], catalog="cyclic_commuting")[0]
    pa, pb = cyc.perms["a"], cyc.perms["b"]
    assert np.array_equal(pa[pb], pb[pa])
    assert sr.orbit_count([pa], 7) == 1


def test_folner_permutation_is_bijection():
    G = sr.GroupSpec.free_abelian(2)
    level = sr.folner_levels(G, [4])[0]
    assert level.provenance == FOLNER
    for key in [(1, 1), (2, 0), (-1, 2)]:
        perm = sr.sofic_permutation(level, G.element_abelian(key))
        assert sorted(perm.tolist()) == list(range(16))


def test_word_composition_matches_congruence_rule():
    """Composing generator permutations along the normal form agrees with the
    direct congruence rule at exact levels."""
    G = sr.GroupSpec.free_abelian(2)
    level = sr.quotient_chain(G, [5])[0]
    g = G.element_abelian([2, -3])
    direct = sr.sofic_permutation(level, g)
    p1, p2 = level.perms["x1"], level.perms["x2"]
    word = p1[p1]
    inv2 = np.argsort(p2)
    for _ in range(3):
        word = word[inv2]
    assert np.array_equal(direct, word)
