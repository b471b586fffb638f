"""Poisson and geometric families in the mean parameterisation.

Both families are indexed by their mean ``mu`` in the open interval
``(0, inf)``.  Codelengths are ideal codelengths in nats, ``-ln P``.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from mdlsel import rng


class NumericOverflowError(ArithmeticError):
    """A codelength evaluated to a non-finite number."""


class Family(enum.Enum):
    POISSON = "poisson"
    GEOMETRIC = "geometric"

    @property
    def parameter_count(self) -> int:
        return 1

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown family {value!r}; expected 'poisson' or 'geometric'") from None


POISSON = Family.POISSON
GEOMETRIC = Family.GEOMETRIC


def as_sample(data: Iterable[int]) -> list[int]:
    """Validate ``data`` as a nonempty sequence of nonnegative integer counts."""
    out = []
    for x in data:
        if isinstance(x, (bool, np.bool_)) or int(x) != x:
            raise ValueError(f"outcomes must be integers, got {x!r}")
        x = int(x)
        if x < 0:
            raise ValueError(f"outcomes must be nonnegative, got {x}")
        out.append(x)
    if not out:
        raise ValueError("sample must contain at least one outcome")
    return out


def _check_mean(mu: float) -> float:
    mu = float(mu)
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValueError(f"mean must be a positive finite real, got {mu!r}")
    return mu


def log_factorial(x: int) -> float:
    """``ln(x!)`` via the log-gamma function."""
    if x < 0:
        raise ValueError(f"log_factorial needs x >= 0, got {x}")
    return math.lgamma(x + 1.0)


def ml_mean(sample: Sequence[int]) -> float | None:
    """Maximum-likelihood mean (the sample average), or ``None`` for an all-zero sample.

    Zero lies outside the open parameter space, so an all-zero sample has no
    ML estimate; callers decide how to treat it.
    """
    sample = as_sample(sample)
    s = sum(sample)
    if s == 0:
        return None
    return s / len(sample)


def outcome_codelength(family: Family, x: int, mu: float) -> float:
    """``-ln P(x | mu)`` for a single outcome."""
    family = Family.parse(family)
    if family is Family.POISSON:
        return math.lgamma(x + 1.0) + mu - x * math.log(mu)
    return (x + 1) * math.log1p(mu) - x * math.log(mu)


def codelength_given_mean(family: Family, sample: Sequence[int], mu: float) -> float:
    """Codelength in nats of ``sample`` under the family member with mean ``mu``.

    Poisson: ``sum ln(x_i!) + n mu - s ln mu``; geometric:
    ``n ln(mu + 1) - s ln(mu / (mu + 1))``, with ``s`` the sum of the sample.
    """
    family = Family.parse(family)
    sample = as_sample(sample)
    mu = _check_mean(mu)
    n, s = len(sample), sum(sample)
    if family is Family.POISSON:
        value = math.fsum(math.lgamma(x + 1.0) for x in sample) + n * mu - s * math.log(mu)
    else:
        value = (n + s) * math.log1p(mu) - s * math.log(mu)
    if not math.isfinite(value):
        raise NumericOverflowError(f"non-finite codelength for {family.value} with mu={mu}")
    return value


def ml_codelength(family: Family, sample: Sequence[int]) -> float:
    """Codelength at the ML mean; the limit 0 for an all-zero sample."""
    mu_hat = ml_mean(sample)
    if mu_hat is None:
        return 0.0
    return codelength_given_mean(family, sample, mu_hat)


def fisher_information(family: Family, mu: float) -> float:
    """Fisher information per outcome: ``1/mu`` (Poisson), ``1/(mu(mu+1))`` (geometric)."""
    family = Family.parse(family)
    mu = _check_mean(mu)
    if family is Family.POISSON:
        return 1.0 / mu
    return 1.0 / (mu * (mu + 1.0))


def variance(family: Family, mu: float) -> float:
    family = Family.parse(family)
    mu = _check_mean(mu)
    if family is Family.POISSON:
        return mu
    return mu * (mu + 1.0)


def pmf(family: Family, x, mu: float) -> np.ndarray:
    """Probability mass at the integer(s) ``x``, evaluated in log space."""
    family = Family.parse(family)
    x = np.asarray(x, dtype=np.float64)
    if family is Family.POISSON:
        logp = x * math.log(mu) - mu - gammaln(x + 1.0)
    else:
        logp = x * math.log(mu) - (x + 1.0) * math.log1p(mu)
    return np.exp(logp)


@lru_cache(maxsize=256)
def _poisson_cdf_table(mu: float) -> np.ndarray:
    # Table runs past the mode until the pmf drops below 1e-20; the final
    # entry is pinned to 1 so every u in [0, 1) maps inside the table.
    k_hi = int(mu + 12.0 * math.sqrt(mu) + 30.0)
    while pmf(Family.POISSON, k_hi, mu) >= 1e-20:
        k_hi *= 2
    cdf = np.cumsum(pmf(Family.POISSON, np.arange(k_hi + 1), mu))
    cdf[-1] = 1.0
    return cdf


def invert_uniforms(family: Family, mu: float, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF transform of uniforms ``u`` in ``[0, 1)`` to outcomes.

    Poisson uses a cumulative table (``x = min{k : u < F(k)}``); geometric uses
    the closed form ``floor(ln(1 - u) / ln(mu / (mu + 1)))``.
    """
    family = Family.parse(family)
    mu = _check_mean(mu)
    u = np.asarray(u, dtype=np.float64)
    if family is Family.POISSON:
        return np.searchsorted(_poisson_cdf_table(mu), u, side="right").astype(np.int64)
    log_q = -math.log1p(1.0 / mu)
    return np.floor(np.log1p(-u) / log_q).astype(np.int64)


def sample_from(family: Family, mu: float, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. draws from the family with mean ``mu``.

    Draw ``i`` is the inverse-CDF image of the ``i``-th uniform of the
    SplitMix64 stream ``seed`` (see :mod:`mdlsel.rng`), so the result is a
    deterministic function of ``(family, mu, n, seed)``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    u = rng.uniforms([seed & rng.MASK64], n)[0]
    return invert_uniforms(family, mu, u)
