"""Rank estimators, integer-rank verification, sandwich, Fourier oracle."""

import math
from fractions import Fraction

import numpy as np
import pytest

import soficrank as sr
from soficrank.groupring import parse_relator
from soficrank.rank import rank_mod_p, sandwich_gap_rate


def _z_levels(degrees):
    G = sr.GroupSpec.free_abelian(1)
    return G, sr.quotient_chain(G, degrees)


def test_vnd_zero_map_is_full():
    G, levels = _z_levels([4, 8])
    zero = sr.GroupRingMatrix(G, [[sr.GroupRingElement.zero(G)]])
    est = sr.vnd_estimate(levels, zero)
    assert all(row["count"] == 1.0 for row in est.table)
    assert est.estimate == 1.0


def test_vnd_circulant_kernel_fraction():
    G, levels = _z_levels([8, 16, 32, 64, 128, 256])
    f = sr.GroupRingMatrix(G, [[sr.parse_element(G, "x - 1")]])
    est = sr.vnd_estimate(levels, f)
    final_eta = est.etas[-1]
    for row in est.rows_at(final_eta):
        assert row["count"] == pytest.approx(1.0 / row["degree"])
    assert est.estimate <= 1.0 / 64
    assert est.envelope[0] <= est.estimate <= est.envelope[1]
    assert est.monotone_in_levels


def test_vnd_needs_two_levels():
    G, levels = _z_levels([4, 8])
    f = sr.GroupRingMatrix(G, [[sr.parse_element(G, "x - 1")]])
    with pytest.raises(ValueError):
        sr.vnd_estimate(levels[:1], f)


def test_vnd_free_group_stacked_column():
    """Kernel of both permutation differences is the orbit constants."""
    F = sr.GroupSpec.free(2)
    levels = sr.quotient_chain(F, [32, 64], seed=2)
    f = sr.GroupRingMatrix(
        F, [[sr.parse_element(F, "a - 1")], [sr.parse_element(F, "b - 1")]]
    )
    est = sr.vnd_estimate(levels, f)
    for row in est.rows_at(est.etas[-1]):
        assert row["count"] == pytest.approx(1.0 / row["degree"])


def test_vr_free_module_exact():
    G, levels = _z_levels([4, 8])
    for n in (1, 2, 3):
        pres = sr.ModulePresentation(G, n, ())
        est = sr.vr_estimate(levels, pres)
        assert est.estimate == float(n)
        assert all(row["count"] == float(n) for row in est.table)
        assert est.extras.get("exact")


def test_vr_principal_module():
    G, levels = _z_levels([8, 16, 32, 64, 128, 256])
    pres = sr.ModulePresentation(G, 1, (parse_relator(G, 1, "x - 1"),))
    est = sr.vr_estimate(levels, pres)
    rows = est.rows_at(est.etas[-1])
    assert rows[-1]["degree"] == 256
    assert rows[-1]["count"] <= 1.0 / 256 + 1e-9
    oracle = sr.fourier_oracle_vr(pres.stacked_matrix(), 512)
    assert oracle == 0.0
    assert abs(est.estimate - oracle) <= 0.05


def test_vr_monotone_in_relators():
    """Appending relators adds a PSD term to the Gram matrix, so per-level
    counts never increase (Weyl); the cutoff diagnostics record it."""
    G, levels = _z_levels([8, 16, 32])
    pres = sr.ModulePresentation(
        G, 1, (parse_relator(G, 1, "x - 1"), parse_relator(G, 1, "x^2 - 1"))
    )
    est = sr.vr_estimate(levels, pres, relator_cutoff=2)
    assert est.extras["monotone_in_cutoff"]
    one = sr.vr_estimate(levels, pres, relator_cutoff=1)
    for r2, r1 in zip(est.rows_at(est.etas[-1]), one.rows_at(one.etas[-1])):
        assert r2["count"] <= r1["count"] + 1e-12


def test_vr_integer_path_orbit_certified():
    F = sr.GroupSpec.free(2)
    levels = sr.quotient_chain(F, [64, 128], seed=3)
    pres = sr.ModulePresentation(
        F, 1, (parse_relator(F, 1, "a - 1"), parse_relator(F, 1, "b - 1"))
    )
    est = sr.vr_estimate(levels, pres, integer_rank=True)
    for row, (_, degree, frac, method) in zip(est.table, est.extras["exact_fractions"]):
        assert Fraction(frac) == Fraction(1, degree)
        assert method == "orbit+mod-p"
        assert row["count"] == pytest.approx(1.0 / degree)


def test_exact_kernel_fraction_general_relator():
    """mod-p elimination on a relator that is not of the g - e shape."""
    G, levels = _z_levels([8, 16])
    pres = sr.ModulePresentation(G, 1, (parse_relator(G, 1, "x + x^-1 - 2"),))
    frac, method = sr.exact_kernel_fraction(levels[1], pres)
    assert method == "mod-p"
    assert frac == Fraction(1, 16)       # kernel of 2I - C - C^T: constants


def test_rank_mod_p_matches_numpy_on_random():
    rng = np.random.default_rng(7)
    for _ in range(10):
        m, n, r = 8, 6, int(rng.integers(0, 6))
        a = rng.integers(-3, 4, size=(m, r)) @ rng.integers(-3, 4, size=(r, n))
        true_rank = np.linalg.matrix_rank(a.astype(float))
        assert rank_mod_p(a) == true_rank


def test_sandwich_worked_values():
    cs = sr.covering_sandwich(0.5, [0.1])
    assert cs.rows[0]["lower"] == 0.5
    assert cs.rows[0]["upper"] == pytest.approx(0.5 * math.log(33) / math.log(10))
    lo, up = sr.sandwich_exponents(0.5, 1e-6)
    assert up - lo <= 0.5 * math.log(6) / math.log(1e6)
    lo0, up0 = sr.sandwich_exponents(0.0, 0.25)
    assert lo0 == up0 == 0.0
    with pytest.raises(ValueError):
        sr.sandwich_exponents(0.5, 1.5)


def test_sandwich_order_and_gap_rate():
    for d in (0.0, 0.25, 1.0, 2.0):
        for eps in (0.5, 0.1, 2.0 ** -10, 2.0 ** -20):
            lo, up = sr.sandwich_exponents(d, eps)
            assert lo <= up
            assert up - lo == pytest.approx(d * sandwich_gap_rate(eps))


def test_fourier_oracle_examples():
    G = sr.GroupSpec.free_abelian(1)
    xm1 = sr.GroupRingMatrix(G, [[sr.parse_element(G, "x - 1")]])
    assert sr.fourier_oracle_vr(xm1, 512) == 0.0
    zero = sr.GroupRingMatrix(G, [[sr.GroupRingElement.zero(G)]])
    assert sr.fourier_oracle_vr(zero, 64) == 1.0
    two = sr.GroupRingMatrix(G, [[sr.parse_element(G, "2")]])
    assert sr.fourier_oracle_vr(two, 64) == 0.0


def test_fourier_oracle_rectangular():
    """A 2 x 1 stack over Z^2: both symbols vanish nowhere simultaneously
    except on a measure-zero set."""
    G = sr.GroupSpec.free_abelian(2)
    f = sr.GroupRingMatrix(
        G, [[sr.parse_element(G, "x1 - 1")], [sr.parse_element(G, "x2 - 1")]]
    )
    assert sr.fourier_oracle_vr(f, 64) == 0.0
    wide = sr.GroupRingMatrix(
        G, [[sr.parse_element(G, "x1 - 1"), sr.parse_element(G, "x1 - 1")]]
    )
    # 1 x 2 matrix: nullity at least 1 everywhere
    assert sr.fourier_oracle_vr(wide, 64) >= 1.0


def test_vr_agreement_with_oracle_z():
    G, levels = _z_levels([32, 64, 128])
    pres = sr.ModulePresentation(G, 1, (parse_relator(G, 1, "x^2 - 1"),))
    est = sr.vr_estimate(levels, pres)
    oracle = sr.fourier_oracle_vr(pres.stacked_matrix(), 512)
    assert abs(est.estimate - oracle) <= 0.05
