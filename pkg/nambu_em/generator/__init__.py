from .generator import (
    KINDS as IC_KINDS, make_ic, plane_wave, standing_wave, random_solenoidal, coulomb_static,
)
from .generator_utils import PolarizationError
from .lattice import (
    LatticeField, NyquistNonzero, NonFiniteSample, NotHermitian,
    to_spectral, to_lattice, parseval_check, forward, inverse,
)
