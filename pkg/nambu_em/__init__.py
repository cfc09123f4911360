"""
Nambu EM - spectral electromagnetic dynamics generated by trilinear Nambu brackets,
with a conservation audit of field functionals.
"""

from . import api
from . import functionals
from . import bracket
from . import simulator
from . import generator
from . import audit
from . import utils

from .utils import VERSION as __version__
