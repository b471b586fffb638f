"""The vectorised deltas must agree with the scalar codelength reports."""

import numpy as np
import pytest

from mdlsel import batch, codes, selection
from mdlsel.codes import Criterion
from mdlsel.models import GEOMETRIC, POISSON

from oracles import harness_decision


@pytest.fixture(scope="module")
def mixed_batch():
    rng = np.random.default_rng(11)
    x = np.vstack([
        rng.poisson(4.0, size=(300, 6)),
        rng.geometric(1 / 5.0, size=(300, 6)) - 1,
        np.zeros((5, 6), dtype=int),
        np.array([[0, 0, 0, 0, 0, 3], [2, 0, 0, 0, 0, 0], [0, 4, 0, 0, 0, 0]]),
    ])
    return batch.Batch(x)


@pytest.mark.parametrize("criterion", codes.STANDARD_CRITERIA, ids=lambda c: c.label)
def test_delta_matches_scalar(criterion, mixed_batch):
    mu = 4.0 if criterion.kind == codes.KNOWN_MU else None
    d, deg, fb = batch.delta(criterion, mixed_batch, mu)
    for row, dv, dg, f in zip(mixed_batch.x.tolist(), d, deg, fb):
        ref = harness_decision(criterion, row, mu)
        assert dv == pytest.approx(ref.delta_nats, abs=1e-10)
        assert selection.decide(dv) == ref.chosen
        assert dg == ref.degenerate
        assert f == (criterion.kind == codes.BAYES_APPROX and sum(row[1:]) == 0)


@pytest.mark.parametrize("n", [1, 2])
def test_small_n(n):
    x = np.arange(12).reshape(-1, n) if n == 2 else np.arange(12).reshape(-1, 1)
    b = batch.Batch(x)
    for c in codes.STANDARD_CRITERIA:
        mu = 1.0 if c.kind == codes.KNOWN_MU else None
        d, _, _ = batch.delta(c, b, mu)
        for row, dv in zip(b.x.tolist(), d):
            assert dv == pytest.approx(harness_decision(c, row, mu).delta_nats, abs=1e-10)


def test_bayes_exact_n1_is_exact_tie():
    d = batch.bayes_exact_delta(batch.Batch(np.arange(50).reshape(-1, 1)))
    assert np.all(d == 0.0)


@pytest.mark.parametrize("family", [POISSON, GEOMETRIC])
def test_plugin_regret_matches_scalar(family):
    rng = np.random.default_rng(2)
    x = rng.poisson(3.0, size=(200, 8))
    x[:20, :4] = 0
    r = batch.plugin_regret(batch.Batch(x), family)
    for row, rv in zip(x.tolist(), r):
        rep = codes.plugin_codelength(family, row)
        suffix = rep.conditioning.covered(row)
        if suffix and sum(suffix):
            assert rv == pytest.approx(codes.regret_of(family, rep, row), abs=1e-10)
        else:
            assert rv == pytest.approx(rep.model_dependent, abs=1e-12)


def test_two_part_gap_at_powers_of_two():
    mu = np.array([0.25, 0.3, 1.0, 4.0, 5.0])
    gap = batch.two_part_complexity_gap(mu)
    for m, g in zip(mu, gap):
        _, rng = codes.two_part_range(float(m))
        expected = np.log(codes.sqrt_fisher_integral(POISSON, rng)) - np.log(codes.sqrt_fisher_integral(GEOMETRIC, rng))
        assert g == pytest.approx(expected, rel=1e-12)


def test_negative_outcomes_rejected():
    with pytest.raises(ValueError):
        batch.Batch(np.array([[1, -1]]))


def test_known_mu_needs_mean():
    with pytest.raises(ValueError):
        batch.delta(Criterion(codes.KNOWN_MU), batch.Batch(np.ones((2, 2), dtype=int)))
