import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mdlsel import models
from mdlsel.models import GEOMETRIC, POISSON, Family

from oracles import log_pmf, truncated_moments

FAMILIES = [POISSON, GEOMETRIC]


# ------------------------------------------------------------------ #
# log_factorial / ml_mean
# ------------------------------------------------------------------ #

@pytest.mark.parametrize("x, expected", [(0, 0.0), (5, math.log(120)), (10, math.log(3628800))])
def test_log_factorial_examples(x, expected):
    assert models.log_factorial(x) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_log_factorial_exact_small():
    for x in range(21):
        assert models.log_factorial(x) == pytest.approx(math.log(math.factorial(x)), rel=1e-12, abs=1e-15)
    assert models.log_factorial(5) == pytest.approx(4.787492, abs=5e-7)
    assert models.log_factorial(10) == pytest.approx(15.104413, abs=5e-7)


def test_log_factorial_large_is_finite():
    assert math.isfinite(models.log_factorial(10**6))


def test_ml_mean():
    assert models.ml_mean([3, 5]) == 4.0
    assert models.ml_mean([7]) == 7.0
    assert models.ml_mean([0, 0]) is None


@pytest.mark.parametrize("bad", [[], [-1], [1.5]])
def test_sample_validation(bad):
    with pytest.raises(ValueError):
        models.ml_mean(bad)


# ------------------------------------------------------------------ #
# codelengths
# ------------------------------------------------------------------ #

def test_codelength_examples():
    assert models.codelength_given_mean(POISSON, [0], 1.0) == pytest.approx(1.0)
    assert models.codelength_given_mean(GEOMETRIC, [0], 1.0) == pytest.approx(math.log(2))
    oracle = -sum(log_pmf(POISSON, x, 4.0) for x in [3, 5])
    assert oracle == pytest.approx(3.488896, abs=5e-7)
    assert models.codelength_given_mean(POISSON, [3, 5], 4.0) == pytest.approx(oracle, rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=15), st.floats(0.01, 50.0), st.sampled_from(FAMILIES))
def test_codelength_matches_pmf_sum(sample, mu, family):
    oracle = -math.fsum(log_pmf(family, x, mu) for x in sample)
    assert models.codelength_given_mean(family, sample, mu) == pytest.approx(oracle, rel=1e-11, abs=1e-11)


def test_codelength_overflow():
    with pytest.raises(models.NumericOverflowError):
        models.codelength_given_mean(POISSON, [0] * 10, 1e308)


def test_mean_must_be_positive():
    with pytest.raises(ValueError):
        models.codelength_given_mean(POISSON, [1], 0.0)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("mu", [0.5, 1.0, 4.0, 8.0, 16.0])
def test_normalisation(family, mu):
    # tail bounds: geometric tail is q**(K+1); Poisson tail is below pmf(K+1) / (1 - mu/(K+2))
    if family is GEOMETRIC:
        q = mu / (mu + 1.0)
        k_max = math.ceil(math.log(1e-11) / math.log(q))
        bound = q ** (k_max + 1)
    else:
        k_max = int(mu) + 1
        while math.exp(log_pmf(POISSON, k_max + 1, mu)) / (1 - mu / (k_max + 2)) >= 1e-11:
            k_max += 1
        bound = math.exp(log_pmf(POISSON, k_max + 1, mu)) / (1 - mu / (k_max + 2))
    assert bound < 1e-10
    total = math.fsum(math.exp(-models.codelength_given_mean(family, [x], mu)) for x in range(k_max + 1))
    assert total == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=1, max_size=12).filter(lambda s: sum(s) > 0),
       st.sampled_from(FAMILIES))
def test_ml_property(sample, family):
    mu_hat = models.ml_mean(sample)
    best = models.codelength_given_mean(family, sample, mu_hat)
    for mu in np.geomspace(mu_hat / 10, 10 * mu_hat, 1000):
        assert models.codelength_given_mean(family, sample, float(mu)) >= best - 1e-9


def test_sufficiency():
    a, b = [0, 4, 2, 6], [3, 3, 3, 3]
    for mu in (0.3, 1.0, 7.5):
        assert models.codelength_given_mean(GEOMETRIC, a, mu) == pytest.approx(
            models.codelength_given_mean(GEOMETRIC, b, mu), rel=1e-13)
        diff = models.codelength_given_mean(POISSON, a, mu) - models.codelength_given_mean(POISSON, b, mu)
        lf = lambda s: sum(models.log_factorial(x) for x in s)
        assert diff == pytest.approx(lf(a) - lf(b), rel=1e-12)


# ------------------------------------------------------------------ #
# Fisher information and variance
# ------------------------------------------------------------------ #

@pytest.mark.parametrize("family, mu, expected", [
    (POISSON, 4.0, 0.25), (GEOMETRIC, 4.0, 0.05), (POISSON, 1.0, 1.0),
])
def test_fisher_examples(family, mu, expected):
    assert models.fisher_information(family, mu) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("mu", [0.7, 4.0, 12.0])
def test_fisher_by_finite_differences(family, mu):
    # I(mu) = E[d^2/dmu^2 (-ln P(x|mu))], expectation by truncated summation
    h = 1e-4 * mu
    k = 400
    total = 0.0
    for x in range(k):
        p = math.exp(log_pmf(family, x, mu))
        if p < 1e-300:
            continue
        f = lambda m: -log_pmf(family, x, m)
        total += p * (f(mu + h) - 2 * f(mu) + f(mu - h)) / h**2
    assert models.fisher_information(family, mu) == pytest.approx(total, rel=1e-5)


@pytest.mark.parametrize("family, mu, expected", [(POISSON, 4.0, 4.0), (GEOMETRIC, 4.0, 20.0), (GEOMETRIC, 1.0, 2.0)])
def test_variance_examples(family, mu, expected):
    _, oracle = truncated_moments(family, mu)
    assert oracle == pytest.approx(expected, rel=1e-10)
    assert models.variance(family, mu) == expected


# ------------------------------------------------------------------ #
# sampling
# ------------------------------------------------------------------ #

@pytest.mark.parametrize("family", FAMILIES)
def test_sample_determinism(family):
    a = models.sample_from(family, 4.0, 50, 12345)
    b = models.sample_from(family, 4.0, 50, 12345)
    c = models.sample_from(family, 4.0, 50, 12346)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.dtype == np.int64 and a.min() >= 0


@pytest.mark.parametrize("family", FAMILIES)
def test_sample_prefix_property(family):
    # draw i depends only on (seed, i)
    long = models.sample_from(family, 8.0, 40, 99)
    short = models.sample_from(family, 8.0, 10, 99)
    assert np.array_equal(long[:10], short)


@pytest.mark.parametrize("family", FAMILIES)
def test_sample_mean_clt(family):
    n = 10**6
    x = models.sample_from(family, 4.0, n, 2024)
    se = math.sqrt(models.variance(family, 4.0) / n)
    assert abs(x.mean() - 4.0) < 5 * se


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("mu", [4.0, 8.0, 16.0])
def test_sample_chi_square(family, mu):
    n = 10**5
    x = models.sample_from(family, mu, n, 7 + int(mu))
    # pool the upper tail so every expected count is at least 5
    k = 0
    while n * (1 - sum(math.exp(log_pmf(family, j, mu)) for j in range(k + 1))) >= 5:
        k += 1
    probs = [math.exp(log_pmf(family, j, mu)) for j in range(k)]
    probs.append(1 - math.fsum(probs))
    observed = np.bincount(np.minimum(x, k), minlength=k + 1)
    _, pvalue = stats.chisquare(observed, n * np.array(probs))
    assert pvalue > 1e-4


def test_poisson_inversion_endpoints():
    u = np.array([0.0, 1.0 - 2.0**-53])
    x = models.invert_uniforms(POISSON, 4.0, u)
    assert x[0] == 0 and x[1] < 100
    g = models.invert_uniforms(GEOMETRIC, 4.0, u)
    assert g[0] == 0 and g[1] < 1000


def test_family_parse():
    assert Family.parse("Poisson") is POISSON
    assert Family.parse(GEOMETRIC) is GEOMETRIC
    assert POISSON.parameter_count == GEOMETRIC.parameter_count == 1
    with pytest.raises(ValueError):
        Family.parse("binomial")
