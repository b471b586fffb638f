"""MDL model selection between the Poisson and geometric families.

Codelengths are in nats.  See :mod:`mdlsel.codes` for the universal codes,
:mod:`mdlsel.selection` for the decision rule and :mod:`mdlsel.harness` for
the Monte Carlo experiments.
"""

__version__ = "0.1.0"

from mdlsel.codes import Criterion, CodelengthReport, DegenerateSampleError, codelength, regret_of
from mdlsel.models import Family, sample_from
from mdlsel.selection import SelectionResult, evaluate, posterior_poisson

__all__ = [
    "Criterion",
    "CodelengthReport",
    "DegenerateSampleError",
    "Family",
    "SelectionResult",
    "codelength",
    "evaluate",
    "posterior_poisson",
    "regret_of",
    "sample_from",
]
