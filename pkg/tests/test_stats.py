import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nklon.errors import ParameterError, ZeroVarianceError
from nklon.stats import (
    lognormal_check,
    mann_whitney,
    pearson,
    pearson_test,
    rankdata,
    shapiro_coefficients,
    shapiro_wilk,
    spearman,
)

# (name, W, p) recorded from a reference AS R94 implementation on the samples below
SHAPIRO_FIXTURES = [
    ("normal_20", 0.9519150912036414, 0.39709889593342174),
    ("normal_120", 0.9851760100957446, 0.21307220650474973),
    ("lognormal_50", 0.8313365164563963, 5.0152646954178155e-06),
    ("cauchy_30", 0.777250524099945, 2.592789571106303e-05),
    ("uniform_7", 0.8455381017475075, 0.11183119404482611),
    ("exponential_4", 0.9136606778898467, 0.5020106662674705),
    ("ties_40", 0.8995077704449496, 0.0018497626791918376),
    ("normal_2500", 0.9995720400864465, 0.8886281536156027),
]

# (name, U, two-sided p); small_ties p is the full permutation enumeration (11440 splits)
MW_FIXTURES = [
    ("small_exact", 14.0, 0.22843822843822847),
    ("small_ties", 30.0, 0.9354895104895105),
    ("medium", 232.0, 0.016009906825372497),
    ("large_ties", 1054.0, 0.053746714150919785),
]


def shapiro_samples():
    rng = np.random.default_rng(20240611)
    return {
        "normal_20": rng.normal(size=20),
        "normal_120": rng.normal(3.0, 2.0, size=120),
        "lognormal_50": rng.lognormal(size=50),
        "cauchy_30": rng.standard_cauchy(size=30),
        "uniform_7": rng.uniform(size=7),
        "exponential_4": rng.exponential(size=4),
        "ties_40": rng.integers(0, 6, size=40).astype(float),
        "normal_2500": rng.normal(size=2500),
    }


def mw_samples():
    rng = np.random.default_rng(77)
    return {
        "small_exact": (rng.normal(size=6), rng.normal(1.0, size=8)),
        "small_ties": (rng.integers(0, 4, size=7).astype(float), rng.integers(1, 5, size=9).astype(float)),
        "medium": (rng.normal(size=25), rng.normal(0.3, size=30)),
        "large_ties": (rng.integers(0, 10, size=60).astype(float), rng.integers(2, 12, size=45).astype(float)),
    }


@pytest.mark.parametrize("name,w,p", SHAPIRO_FIXTURES)
def test_shapiro_matches_reference(name, w, p):
    res = shapiro_wilk(shapiro_samples()[name])
    assert abs(res.statistic - w) < 1e-6
    assert abs(res.p_value - p) < 1e-6


@pytest.mark.parametrize("name,u,p", MW_FIXTURES)
def test_mann_whitney_matches_reference(name, u, p):
    a, b = mw_samples()[name]
    res = mann_whitney(a, b)
    assert res.statistic == u
    assert abs(res.p_value - p) < 1e-6


def test_shapiro_coefficients_known_table():
    # exact published weights for n = 10; the approximation is within ~5e-4
    a = shapiro_coefficients(10)
    assert np.allclose(a[::-1][:5], [0.5739, 0.3291, 0.2141, 0.1224, 0.0399], atol=1e-3)
    assert math.isclose(float(a @ a), 1.0)


def test_shapiro_normal_calibration():
    passes = sum(
        shapiro_wilk(np.random.default_rng(seed).normal(size=50)).p_value > 0.01 for seed in range(100)
    )
    assert passes >= 98


def test_shapiro_heavy_tail_rejected():
    rejects = sum(
        shapiro_wilk(np.random.default_rng(seed).standard_cauchy(size=50)).p_value < 0.01 for seed in range(100)
    )
    assert rejects >= 80


def test_shapiro_errors():
    with pytest.raises(ZeroVarianceError):
        shapiro_wilk([2.0] * 10)
    with pytest.raises(ParameterError):
        shapiro_wilk([1.0, 2.0])
    with pytest.raises(ParameterError):
        shapiro_wilk(np.arange(5001.0))


def test_lognormal_check():
    passes = sum(lognormal_check(np.exp(np.random.default_rng(s).normal(size=60))) for s in range(100))
    assert passes >= 98
    with pytest.raises(ZeroVarianceError):
        lognormal_check([3.0, 3.0, 3.0, 3.0])
    with pytest.raises(ParameterError):
        lognormal_check([1.0, 0.0, 2.0])


def test_pearson_trivial():
    xs = np.arange(10.0)
    assert pearson(xs, 2 * xs + 3) == 1.0
    assert pearson(xs, -xs) == -1.0
    with pytest.raises(ZeroVarianceError):
        pearson(xs, np.ones(10))
    with pytest.raises(ParameterError):
        pearson([1.0, 2.0], [1.0])


def test_pearson_reference():
    rng = np.random.default_rng(5)
    x = rng.normal(size=100)
    y = 0.4 * x + rng.normal(size=100)
    res = pearson_test(x, y)
    assert abs(res.statistic - 0.26748233603809884) < 1e-12
    assert abs(res.p_value - 0.007136583675263242) < 1e-9


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30),
    st.floats(0.1, 10.0),
    st.floats(-100.0, 100.0),
)
def test_pearson_affine_invariance(xs, scale, shift):
    xs = np.array(xs)
    ys = np.sin(xs) + 0.1 * xs
    if np.ptp(xs) < 1e-6 or np.ptp(ys) < 1e-6:
        return
    assert math.isclose(pearson(xs, ys), pearson(scale * xs + shift, ys), abs_tol=1e-9)


def test_spearman_monotone():
    x = np.arange(1.0, 20.0)
    assert spearman(x, np.exp(x)) == 1.0
    assert spearman(x, -(x**3)) == -1.0


def test_rankdata_midranks():
    assert rankdata([10, 20, 20, 30]).tolist() == [1.0, 2.5, 2.5, 4.0]


def test_mann_whitney_identities():
    assert mann_whitney([1, 2], [3, 4]).statistic == 0.0
    a = [1.0, 4.0, 4.0, 9.0]
    assert mann_whitney(a, a).statistic == len(a) ** 2 / 2
    with pytest.raises(ParameterError):
        mann_whitney([], [1.0])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 8), min_size=1, max_size=30),
    st.lists(st.integers(0, 8), min_size=1, max_size=30),
)
def test_mann_whitney_u_complement(a, b):
    u_ab = mann_whitney(a, b)
    u_ba = mann_whitney(b, a)
    assert u_ab.statistic + u_ba.statistic == len(a) * len(b)
    assert 0.0 <= u_ab.p_value <= 1.0
    assert math.isclose(u_ab.p_value, u_ba.p_value, rel_tol=1e-9, abs_tol=1e-12)


def test_mann_whitney_one_sided():
    lo = np.arange(20.0)
    hi = lo + 15.0
    assert mann_whitney(hi, lo, alternative="greater").p_value < 1e-4
    assert mann_whitney(hi, lo, alternative="less").p_value > 0.99
