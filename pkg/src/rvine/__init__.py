"""Regular-vine copulas: matrix structures, density, simulation, selection and fitting."""

from .bicop import Family, PairCopula
from .evaluate import RVineModel
from .fit import fit_mle, vuong
from .select import SelectionOptions, sequential_select
from .structure import RVineStructure, constraint_set, validate

__all__ = [
    "Family",
    "PairCopula",
    "RVineModel",
    "RVineStructure",
    "SelectionOptions",
    "constraint_set",
    "fit_mle",
    "sequential_select",
    "validate",
    "vuong",
]
