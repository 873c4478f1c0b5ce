"""Weyl-quantized operators on a 1D grid and the stability of their spectra under dilation-type perturbations."""
from .errors import *  # noqa: F401,F403
from .symbols import *  # noqa: F401,F403
from .quantize import *  # noqa: F401,F403
from .spectra import *  # noqa: F401,F403
from .stability import *  # noqa: F401,F403
from .edges import *  # noqa: F401,F403

__version__ = "0.1.0"
