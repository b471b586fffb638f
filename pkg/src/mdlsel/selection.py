"""MAP model selection from a pair of codelength reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import expit

from mdlsel import codes
from mdlsel.codes import Criterion, DegenerateSampleError
from mdlsel.models import Family

POISSON = "poisson"
GEOMETRIC = "geometric"
TIE = "tie"

# Ties, including every all-zero sample for criteria that need an ML
# estimate, score as half an error for either generating family.
TIE_POLICY = "tie-half-error"


class ConditioningMismatchError(RuntimeError):
    """The two family reports do not code the same outcomes."""


@dataclass(frozen=True)
class SelectionResult:
    delta_nats: float
    chosen: str
    posterior_poisson: float
    degenerate: bool = False


def posterior_poisson(delta_nats: float) -> float:
    """``exp(-L_P) / (exp(-L_P) + exp(-L_G))`` evaluated as ``logistic(-delta)``."""
    if not math.isfinite(delta_nats):
        raise ValueError(f"delta must be finite, got {delta_nats}")
    return float(expit(-delta_nats))


def decide(delta_nats: float) -> str:
    if delta_nats < 0:
        return POISSON
    if delta_nats > 0:
        return GEOMETRIC
    return TIE


def evaluate(criterion: Criterion | str, sample: Sequence[int],
             mu_true: float | None = None) -> SelectionResult:
    """Select between Poisson and geometric for ``sample`` under ``criterion``."""
    criterion = Criterion.parse(criterion)
    if (criterion.kind == codes.KNOWN_MU) != (mu_true is not None):
        raise ValueError("mu_true must be given exactly when the criterion is known-mu")
    try:
        rep_p = codes.codelength(criterion, Family.POISSON, sample, mu_true)
        rep_g = codes.codelength(criterion, Family.GEOMETRIC, sample, mu_true)
    except DegenerateSampleError:
        return SelectionResult(0.0, TIE, 0.5, degenerate=True)
    if rep_p.conditioning != rep_g.conditioning:
        raise ConditioningMismatchError(f"{rep_p.conditioning} != {rep_g.conditioning}")
    if rep_p.degenerate or rep_g.degenerate:
        return SelectionResult(0.0, TIE, 0.5, degenerate=True)
    # startup and hyper-parameter lengths are identical and cancel
    delta = rep_p.model_dependent - rep_g.model_dependent
    return SelectionResult(delta, decide(delta), posterior_poisson(delta))
