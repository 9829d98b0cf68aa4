"""Bipartite out-of-time-order correlators for finite-dimensional systems.

The bipartite OTOC ``G`` of a unitary on ``H_A (x) H_B`` is computed exactly,
through the reduced channel, at finite temperature, by Monte Carlo, and by
a hierarchy of infinite-time-average estimates built from the spectrum.
"""

from .channels import *  # noqa: F401,F403
from .estimates import *  # noqa: F401,F403
from .io import load_matrix, save_matrix, MatrixFormatError
from .linalg import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from .otoc import *  # noqa: F401,F403

__version__ = "0.1.0"
