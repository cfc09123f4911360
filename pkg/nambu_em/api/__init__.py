from .api import (
    Grid, Mode, Violation, SpectralState, ValidationReport,
    ConstraintError, PairingError, NoGrid,
    hermitian_pair_index, validate, project_constraints,
    gauss_residuals, hermitian_residuals, max_gauss_violation, max_hermitian_violation,
)
from .api_utils import *
