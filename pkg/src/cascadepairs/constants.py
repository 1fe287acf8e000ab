"""Physical constants and fixed numerical constants shared across modules."""

import numpy as np
from scipy.constants import c, epsilon_0
from scipy.optimize import brentq

SPEED_OF_LIGHT = c
VACUUM_PERMITTIVITY = epsilon_0

FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


def _sinc2_half_max_root():
    # sinc^2(x) = 1/2 on the first lobe, x in (0, pi)
    return brentq(lambda x: (np.sin(x) / x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


SINC2_HALF_MAX_ROOT = _sinc2_half_max_root()  # 1.391557...
