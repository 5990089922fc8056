"""Allen-Cahn implicit midpoint solver with neural and ETD initial guesses."""

from ._nhns import *  # noqa: F401,F403
from ._nhns import __doc__  # noqa: F401
