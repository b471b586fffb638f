import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlsel import codes, selection
from mdlsel.codes import Criterion
from mdlsel.selection import GEOMETRIC, POISSON, TIE

samples = st.lists(st.integers(0, 30), min_size=1, max_size=15)


def test_bayes_exact_selection():
    r = selection.evaluate("bayes-exact", [1, 1])
    delta = -math.log(3 / (8 * math.sqrt(2))) + math.log(6 / 35)
    assert r.delta_nats == pytest.approx(delta, rel=1e-12)
    assert r.delta_nats == pytest.approx(-0.436186, abs=5e-7)
    assert r.chosen == POISSON
    assert r.posterior_poisson == pytest.approx(1 / (1 + math.exp(delta)), rel=1e-12)
    assert r.posterior_poisson == pytest.approx(0.607350, abs=5e-7)


def test_known_mu_selection():
    r = selection.evaluate("known-mu", [0, 0], mu_true=1.0)
    assert r.delta_nats == pytest.approx(2.0 - 2 * math.log(2))
    assert r.chosen == GEOMETRIC and not r.degenerate


def test_bic_degenerate_tie():
    r = selection.evaluate("bic", [0, 0])
    assert (r.delta_nats, r.chosen, r.posterior_poisson, r.degenerate) == (0.0, TIE, 0.5, True)


@pytest.mark.parametrize("criterion", ["bic", "anml-10", "anml-two-part", "plug-in"])
def test_all_zero_is_degenerate_tie(criterion):
    r = selection.evaluate(criterion, [0, 0, 0, 0])
    assert r.chosen == TIE and r.degenerate and r.delta_nats == 0.0


def test_bayes_on_all_zero_is_not_degenerate():
    r = selection.evaluate("bayes-exact", [0, 0, 0])
    assert not r.degenerate and r.chosen != TIE


def test_anml_threshold():
    r = selection.evaluate(Criterion(codes.ANML, 1000.0), [3, 5])
    bic = selection.evaluate("bic", [3, 5])
    assert r.delta_nats == pytest.approx(bic.delta_nats + codes.delta_threshold(1000.0), rel=1e-12)


def test_known_mu_requires_mean():
    with pytest.raises(ValueError):
        selection.evaluate("known-mu", [1, 2])
    with pytest.raises(ValueError):
        selection.evaluate("bic", [1, 2], mu_true=2.0)


def test_posterior_values():
    assert selection.posterior_poisson(0.0) == 0.5
    assert selection.posterior_poisson(-0.436186) == pytest.approx(0.607350, abs=1e-6)
    tiny = selection.posterior_poisson(50.0)
    assert 0 < tiny < 2e-22
    assert selection.posterior_poisson(-800.0) == 1.0
    assert selection.posterior_poisson(800.0) == 0.0
    with pytest.raises(ValueError):
        selection.posterior_poisson(float("nan"))


@given(st.floats(-700, 700))
def test_posterior_symmetry(d):
    assert selection.posterior_poisson(-d) == pytest.approx(1 - selection.posterior_poisson(d), abs=1e-15)


@given(st.floats(-700, 700), st.floats(-1e3, 1e3))
def test_shift_invariance(d, c):
    lp, lg = 10.0 + d, 10.0
    shifted = (lp + c) - (lg + c)
    assert selection.decide(shifted) == selection.decide(lp - lg) or abs(d) < 1e-9
    assert selection.posterior_poisson(shifted) == pytest.approx(selection.posterior_poisson(lp - lg), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(samples, st.sampled_from([c for c in codes.STANDARD_CRITERIA if c.kind != codes.KNOWN_MU]))
def test_decision_posterior_coherence(sample, criterion):
    r = selection.evaluate(criterion, sample)
    if r.chosen == POISSON:
        assert r.posterior_poisson > 0.5
    elif r.chosen == GEOMETRIC:
        assert r.posterior_poisson < 0.5
    else:
        assert r.posterior_poisson == 0.5
    assert selection.evaluate(criterion, sample) == r
