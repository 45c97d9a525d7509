"""Singular profiles, counting functions, and moment comparisons."""

import numpy as np
import pytest

import soficrank as sr


def _z_setup(n, text="x - 1"):
    G = sr.GroupSpec.free_abelian(1)
    level = sr.quotient_chain(G, [n])[0]
    f = sr.GroupRingMatrix(G, [[sr.parse_element(G, text)]])
    return G, level, f


def test_profile_matches_circulant_oracle():
    """sigma(x - 1) on Z/8 has singular values 2|sin(pi k / 8)|."""
    _, level, f = _z_setup(8)
    prof = sr.singular_profile(sr.represent(level, f))
    oracle = np.sort(2.0 * np.abs(np.sin(np.pi * np.arange(8) / 8)))
    assert np.allclose(prof.values, oracle, atol=1e-10)
    assert prof.values[0] == pytest.approx(0.0, abs=1e-10)
    assert np.count_nonzero(prof.values < 1e-8) == 1


def test_profile_zero_and_scalar():
    G, level, _ = _z_setup(5)
    zero = sr.GroupRingMatrix(G, [[sr.GroupRingElement.zero(G)]])
    prof = sr.singular_profile(sr.represent(level, zero))
    assert np.all(prof.values == 0.0)
    two = sr.GroupRingMatrix(G, [[sr.parse_element(G, "2")]])
    prof2 = sr.singular_profile(sr.represent(level, two))
    assert np.allclose(prof2.values, 2.0)


def test_counting_function_examples():
    G, level, f = _z_setup(8)
    prof = sr.singular_profile(sr.represent(level, f))
    cf = sr.counting_function(prof, [0.1])
    assert cf.values[0] == pytest.approx(1.0 / 8)       # 2 sin(pi/8) ~ 0.765 stays out
    zero = sr.GroupRingMatrix(G, [[sr.GroupRingElement.zero(G)]])
    cf0 = sr.counting_function(sr.singular_profile(sr.represent(level, zero)), [0.0, 0.5])
    assert cf0.values == [1.0, 1.0]
    cf_all = sr.counting_function(prof, [10.0])
    assert cf_all.values[0] == pytest.approx(1.0)       # block count n = 1


def test_counting_function_monotone_and_tie_handling():
    _, level, f = _z_setup(8)
    prof = sr.singular_profile(sr.represent(level, f))
    etas = [0.0, 0.1, 0.5, 0.765, 2.0, 10.0]
    cf = sr.counting_function(prof, etas)
    assert all(a <= b for a, b in zip(cf.values, cf.values[1:]))
    tie = sr.counting_function(prof, [float(prof.values[3])])
    assert tie.values[0] >= 4.0 / 8                      # closed at the threshold
    with pytest.raises(ValueError):
        sr.counting_function(prof, [-1.0])


def test_moment_check_exact_cases():
    G, level, f = _z_setup(16, "x + x^-1")
    rep = sr.moment_check(level, f, 4)
    for row in rep.rows:
        assert row["diff"] == 0.0
        assert row["exact_level"]
        assert row["certified"]
    one = sr.GroupRingMatrix(G, [[sr.GroupRingElement.one(G)]])
    rep1 = sr.moment_check(level, one, 3)
    assert all(row["empirical"] == 1.0 and row["exact"] == 1 for row in rep1.rows)


def test_moment_check_flags_wraparound():
    """At N = 8 the support of (f* f)^4 reaches +-8 = 0 mod 8; the finite
    trace picks up exactly the two wrapped coefficients."""
    _, level, f = _z_setup(8, "x + x^-1")
    rep = sr.moment_check(level, f, 4)
    assert rep.rows[2]["exact_level"] and rep.rows[2]["diff"] == 0.0
    assert not rep.rows[3]["exact_level"]
    assert rep.rows[3]["diff"] == 2.0


def test_moment_check_free_group_pair():
    F = sr.GroupSpec.free(2)
    level = sr.quotient_chain(F, [64], seed=0)[0]   # a^-1 b acts freely here
    f = sr.GroupRingMatrix(F, [[sr.parse_element(F, "a + b")]])
    rep = sr.moment_check(level, f, 1)
    assert rep.rows[0]["exact_level"]
    assert rep.rows[0]["empirical"] == 2.0 and rep.rows[0]["exact"] == 2


def test_perturbation_zero_noise_matches():
    _, level, f = _z_setup(16, "x + x^-1")
    base = sr.moment_check(level, f, 3)
    pert = sr.perturbation_moment_check(level, f, 0.0, 3)
    for b, p in zip(base.rows, pert.rows):
        assert p["drift"] <= 1e-9
        assert p["empirical"] == pytest.approx(b["empirical"], abs=1e-9)


def test_perturbation_drift_bound():
    _, level, f = _z_setup(64)
    s = 0.01
    rep = sr.perturbation_moment_check(level, f, s, 1, seed=3)
    row = rep.rows[0]
    assert row["drift_bound"] == pytest.approx(2 * s * (2 + s))
    assert row["drift"] <= row["drift_bound"]


def test_perturbation_of_zero_map():
    G, level, _ = _z_setup(32)
    zero = sr.GroupRingMatrix(G, [[sr.GroupRingElement.zero(G)]])
    s = 0.01
    rep = sr.perturbation_moment_check(level, zero, s, 1, seed=4)
    assert rep.rows[0]["empirical"] <= s * s + 1e-12


def test_squared_values_match_hs_norm():
    _, level, f = _z_setup(16, "x + 2*x^-1 - 1")
    rep = sr.represent(level, f)
    prof = sr.singular_profile(rep)
    lhs = (prof.values ** 2).sum() / (1 * level.degree)
    assert lhs == pytest.approx(sr.normalized_hs_norm(rep) ** 2, abs=1e-9)


def test_cdf_converges_to_fourier_oracle():
    """Empirical spectral CDF at fixed eta vs the symbol oracle, N = 256."""
    G = sr.GroupSpec.free_abelian(1)
    level = sr.quotient_chain(G, [256])[0]
    f = sr.GroupRingMatrix(G, [[sr.parse_element(G, "x + x^-1")]])
    prof = sr.singular_profile(sr.represent(level, f))
    for eta in (0.5, 1.0, 1.5):
        empirical = sr.counting_function(prof, [eta]).values[0]
        oracle = sr.fourier_symbol_counting(f, eta, grid=4096)
        assert abs(empirical - oracle) <= 0.05


def test_iterative_counting_matches_dense():
    _, level, f = _z_setup(32)
    rep = sr.represent(level, f)
    prof = sr.singular_profile(rep)
    for eta in (0.1, 0.3, 0.7):
        dense_count = int(np.count_nonzero(prof.values <= eta + 1e-12))
        it = sr.count_below_iterative(rep, eta)
        assert it["complete"]
        assert it["lower"] <= dense_count <= it["upper"]
        assert it["upper"] - it["lower"] <= 1
