"""Universal codelengths for the Poisson and geometric families.

Each criterion turns a sample into a :class:`CodelengthReport` per family.
These are scalar, pure-Python implementations; :mod:`mdlsel.batch` holds the
vectorised counterparts used by the Monte Carlo harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from mdlsel.models import (
    Family,
    as_sample,
    codelength_given_mean,
    ml_codelength,
    ml_mean,
    outcome_codelength,
)

LN2 = math.log(2.0)
HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)


class DegenerateSampleError(ValueError):
    """The criterion needs an ML estimate but the (relevant part of the) sample is all zeros."""


# --------------------------------------------------------------------------
# Criterion identifiers
# --------------------------------------------------------------------------

KNOWN_MU = "known-mu"
BIC = "bic"
ANML = "anml"
ANML_TWO_PART = "anml-two-part"
PLUG_IN = "plug-in"
BAYES_EXACT = "bayes-exact"
BAYES_APPROX = "bayes-approx"

KINDS = (KNOWN_MU, BIC, ANML, ANML_TWO_PART, PLUG_IN, BAYES_EXACT, BAYES_APPROX)


@dataclass(frozen=True)
class Criterion:
    """A model-selection criterion; restricted ANML carries its upper bound ``mu_star``."""

    kind: str
    mu_star: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown criterion {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == ANML:
            if self.mu_star is None or not (self.mu_star > 0 and math.isfinite(self.mu_star)):
                raise ValueError("restricted ANML needs a positive finite mu_star")
            object.__setattr__(self, "mu_star", float(self.mu_star))
        elif self.mu_star is not None:
            raise ValueError(f"criterion {self.kind!r} takes no mu_star")

    @property
    def label(self) -> str:
        if self.kind == ANML:
            return f"anml-{self.mu_star:g}"
        return self.kind

    @classmethod
    def parse(cls, text: "str | Criterion", mu_star: float | None = None) -> "Criterion":
        """Parse labels such as ``bic``, ``anml-1000`` or ``anml`` with an explicit ``mu_star``."""
        if isinstance(text, Criterion):
            return text
        text = text.strip().lower().replace("_", "-")
        aliases = {"knownmu": KNOWN_MU, "two-part": ANML_TWO_PART, "plugin": PLUG_IN,
                   "bayes": BAYES_EXACT, "ml": BIC}
        text = aliases.get(text, text)
        if text.startswith("anml-") and text != ANML_TWO_PART:
            return cls(ANML, float(text[len("anml-"):]))
        if text == ANML:
            return cls(ANML, mu_star)
        return cls(text)

    def __str__(self) -> str:
        return self.label


STANDARD_CRITERIA = (
    Criterion(KNOWN_MU),
    Criterion(BIC),
    Criterion(ANML, 10.0),
    Criterion(ANML, 100.0),
    Criterion(ANML, 1000.0),
    Criterion(ANML_TWO_PART),
    Criterion(PLUG_IN),
    Criterion(BAYES_EXACT),
    Criterion(BAYES_APPROX),
)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Conditioning:
    """Which outcomes a report's model-dependent length covers.

    ``full``: all outcomes.  ``first``: conditioned on the first outcome.
    ``startup``: the first ``prefix`` outcomes went through the model-free
    startup code.
    """

    kind: str = "full"
    prefix: int = 0

    def covered(self, sample: Sequence[int]) -> list[int]:
        if self.kind == "full":
            return list(sample)
        if self.kind == "first":
            return list(sample[1:])
        return list(sample[self.prefix:])

    def __str__(self) -> str:
        if self.kind == "full":
            return "full"
        if self.kind == "first":
            return "conditioned-on-first"
        return f"startup-excluded({self.prefix})"


FULL = Conditioning("full")
ON_FIRST = Conditioning("first")


@dataclass(frozen=True)
class CodelengthReport:
    total: float
    model_dependent: float
    conditioning: Conditioning = FULL
    hyper_code_length: float = 0.0
    startup_length: float = 0.0
    degenerate: bool = False


@dataclass(frozen=True)
class RestrictedRange:
    """Parameter range ``(lower, upper]``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid range ({self.lower}, {self.upper}]")


# --------------------------------------------------------------------------
# Integer codes
# --------------------------------------------------------------------------

def elias_gamma_bits(value: int) -> int:
    """Length in bits of the Elias-gamma codeword for ``value >= 1``."""
    if value < 1:
        raise ValueError(f"Elias gamma codes positive integers, got {value}")
    return 2 * (value.bit_length() - 1) + 1


def zigzag(b: int) -> int:
    """Map 0, -1, 1, -2, 2, ... to 0, 1, 2, 3, 4, ..."""
    return 2 * b if b >= 0 else -2 * b - 1


def signed_integer_codelength(b: int) -> float:
    """Nats for a signed integer: Elias gamma on ``zigzag(b) + 1``."""
    return elias_gamma_bits(zigzag(b) + 1) * LN2


def startup_codelength(x: int) -> float:
    """Model-free code for one nonnegative outcome: Elias gamma on ``x + 1``, in nats."""
    return elias_gamma_bits(x + 1) * LN2


# --------------------------------------------------------------------------
# Parametric-complexity pieces
# --------------------------------------------------------------------------

def sqrt_fisher_integral(family: Family, range_: RestrictedRange) -> float:
    """Integral of the square-root Fisher information over ``range_``.

    Poisson: ``2 sqrt(mu)``; geometric: ``2 asinh(sqrt(mu))``, which equals
    ``2 ln(sqrt(mu) + sqrt(mu + 1))``.
    """
    family = Family.parse(family)
    lo, hi = math.sqrt(range_.lower), math.sqrt(range_.upper)
    if family is Family.POISSON:
        return 2.0 * (hi - lo)
    return 2.0 * (math.asinh(hi) - math.asinh(lo))


def delta_threshold(mu_star: float) -> float:
    """Restricted Poisson minus restricted geometric complexity on ``(0, mu_star]``.

    Evaluated as ``-ln(asinh(r) / r)`` with ``r = sqrt(mu_star)``, which avoids
    cancellation for small ``mu_star``.
    """
    if not mu_star > 0:
        raise ValueError(f"mu_star must be positive, got {mu_star}")
    r = math.sqrt(mu_star)
    return -math.log(math.asinh(r) / r)


def two_part_range(mu_hat: float) -> tuple[int, RestrictedRange]:
    """``b = ceil(log2 mu_hat)`` and the range ``(2**(b-1), 2**b]`` containing ``mu_hat``."""
    if not mu_hat > 0:
        raise ValueError(f"mu_hat must be positive, got {mu_hat}")
    m, e = math.frexp(mu_hat)  # mu_hat = m * 2**e, 0.5 <= m < 1
    b = e - 1 if m == 0.5 else e
    return b, RestrictedRange(math.ldexp(1.0, b - 1), math.ldexp(1.0, b))


# --------------------------------------------------------------------------
# Codelength functions
# --------------------------------------------------------------------------

def codelength_known_mu(family: Family, sample: Sequence[int], mu_true: float) -> CodelengthReport:
    value = codelength_given_mean(family, sample, mu_true)
    return CodelengthReport(total=value, model_dependent=value)


def codelength_bic(family: Family, sample: Sequence[int]) -> CodelengthReport:
    sample = as_sample(sample)
    value = ml_codelength(family, sample) + 0.5 * math.log(len(sample))
    return CodelengthReport(total=value, model_dependent=value, degenerate=sum(sample) == 0)


def _require_mu_hat(sample: list[int]) -> float:
    mu_hat = ml_mean(sample)
    if mu_hat is None:
        raise DegenerateSampleError("all-zero sample has no ML estimate")
    return mu_hat


def anml_restricted_codelength(family: Family, sample: Sequence[int], mu_star: float) -> CodelengthReport:
    """ANML with the parameter range restricted to ``(0, mu_star]``.

    Evaluated regardless of whether the ML mean falls inside the range.
    """
    sample = as_sample(sample)
    mu_hat = _require_mu_hat(sample)
    n = len(sample)
    value = (codelength_given_mean(family, sample, mu_hat)
             + 0.5 * math.log(n) - HALF_LN_2PI
             + math.log(sqrt_fisher_integral(family, RestrictedRange(0.0, mu_star))))
    return CodelengthReport(total=value, model_dependent=value)


def anml_two_part_codelength(family: Family, sample: Sequence[int]) -> CodelengthReport:
    sample = as_sample(sample)
    mu_hat = _require_mu_hat(sample)
    b, range_ = two_part_range(mu_hat)
    n = len(sample)
    model_part = (codelength_given_mean(family, sample, mu_hat)
                  + 0.5 * math.log(n) - HALF_LN_2PI
                  + math.log(sqrt_fisher_integral(family, range_)))
    hyper = signed_integer_codelength(b)
    return CodelengthReport(total=model_part + hyper, model_dependent=model_part, hyper_code_length=hyper)


def plugin_codelength(family: Family, sample: Sequence[int]) -> CodelengthReport:
    """Prequential plug-in code.

    Outcomes up to and including the first nonzero one go through the
    model-free startup code; each later outcome is coded with the family
    member at the running ML mean.
    """
    family = Family.parse(family)
    sample = as_sample(sample)
    p = next((i + 1 for i, x in enumerate(sample) if x != 0), len(sample))
    startup = math.fsum(startup_codelength(x) for x in sample[:p])
    running = sum(sample[:p])
    terms = []
    for i in range(p, len(sample)):
        x = sample[i]
        terms.append(outcome_codelength(family, x, running / i))
        running += x
    model = math.fsum(terms)
    return CodelengthReport(
        total=startup + model,
        model_dependent=model,
        conditioning=Conditioning("startup", p),
        startup_length=startup,
        degenerate=sum(sample) == 0,
    )


def bayes_exact_codelength(family: Family, sample: Sequence[int]) -> CodelengthReport:
    """Jeffreys-prior Bayes code for ``x_2..x_n`` given ``x_1``, via log-gamma."""
    family = Family.parse(family)
    sample = as_sample(sample)
    n = len(sample)
    if n == 1:
        return CodelengthReport(total=0.0, model_dependent=0.0, conditioning=ON_FIRST)
    x1, s = sample[0], sum(sample)
    if family is Family.POISSON:
        log_p = (math.lgamma(s + 0.5) - math.lgamma(x1 + 0.5) - (s + 0.5) * math.log(n)
                 - math.fsum(math.lgamma(x + 1.0) for x in sample[1:]))
    else:
        log_p = math.log(x1 + 0.5) + math.lgamma(s + 0.5) + math.lgamma(n) - math.lgamma(n + s + 0.5)
    return CodelengthReport(total=-log_p, model_dependent=-log_p, conditioning=ON_FIRST)


def bayes_approx_codelength(family: Family, sample: Sequence[int], *, corrected: bool = False) -> CodelengthReport:
    """Asymptotic approximation of :func:`bayes_exact_codelength`.

    The half-log term uses the full sample length ``n``.  For the geometric
    family the default reproduces the published expression, whose
    prior-ratio term carries ``0.5 ln(mu)``; ``corrected=True`` uses
    ``ln(mu + 1)`` instead, which is what ``ln(sqrt(I(mu)) / w(mu | x_1))``
    evaluates to for the geometric Jeffreys posterior.
    """
    family = Family.parse(family)
    sample = as_sample(sample)
    n = len(sample)
    if n < 2:
        raise DegenerateSampleError("approximate Bayes code needs at least two outcomes")
    rest = sample[1:]
    m = _require_mu_hat(rest)
    x1 = sample[0]
    value = codelength_given_mean(family, rest, m) + 0.5 * math.log(n) - HALF_LN_2PI
    if family is Family.POISSON:
        value += m - x1 * math.log(m) + math.lgamma(x1 + 0.5)
    else:
        tail = math.log1p(m) if corrected else 0.5 * math.log(m)
        value += x1 * math.log1p(1.0 / m) + tail - math.log(x1 + 0.5)
    return CodelengthReport(total=value, model_dependent=value, conditioning=ON_FIRST)


def codelength(criterion: Criterion | str, family: Family, sample: Sequence[int],
               mu_true: float | None = None) -> CodelengthReport:
    """Dispatch to the codelength function for ``criterion``."""
    criterion = Criterion.parse(criterion)
    kind = criterion.kind
    if kind == KNOWN_MU:
        if mu_true is None:
            raise ValueError("the known-mu criterion needs the true mean")
        return codelength_known_mu(family, sample, mu_true)
    if kind == BIC:
        return codelength_bic(family, sample)
    if kind == ANML:
        return anml_restricted_codelength(family, sample, criterion.mu_star)
    if kind == ANML_TWO_PART:
        return anml_two_part_codelength(family, sample)
    if kind == PLUG_IN:
        return plugin_codelength(family, sample)
    if kind == BAYES_EXACT:
        return bayes_exact_codelength(family, sample)
    return bayes_approx_codelength(family, sample)


def regret_of(family: Family, report: CodelengthReport, sample: Sequence[int]) -> float:
    """Model-dependent length minus the ML codelength of the outcomes it covers."""
    covered = report.conditioning.covered(as_sample(sample))
    if not covered or sum(covered) == 0:
        raise DegenerateSampleError("regret needs an ML estimate of the covered outcomes")
    return report.model_dependent - ml_codelength(family, covered)


def nml_divergence_diagnostic(family: Family, n: int, x_max: int) -> float:
    """Partial sum ``sum_{x=1}^{x_max} P(x | mu_hat = x)`` of the single-outcome NML normaliser.

    The full sum diverges for both families; the partial sums show how.
    """
    family = Family.parse(family)
    if n != 1:
        raise NotImplementedError("only n = 1 is supported")
    if x_max < 1:
        raise ValueError(f"x_max must be positive, got {x_max}")
    x = np.arange(1, x_max + 1, dtype=np.float64)
    if family is Family.POISSON:
        log_terms = x * np.log(x) - x - gammaln(x + 1.0)
    else:
        log_terms = x * np.log(x) - (x + 1.0) * np.log1p(x)
    return math.fsum(np.exp(log_terms))
