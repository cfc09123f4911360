from .bracket import (
    BracketResult, BracketEngine, NonHolomorphicError, PATH_GENERIC, PATH_CLOSED_FORM,
    bracket3, maxwell_rhs, triple_scale, antisymmetry_check, closed_form_rate, conservation_rate,
)
