""" CODATA physical constants used throughout the package. Values come from scipy.constants and
are fixed once at import time. """

import math
from collections import namedtuple

from scipy import constants as _codata

PhysicalConstants = namedtuple("PhysicalConstants", ["h", "hbar", "k_B", "c", "eps0", "mu0", "Z_vac"])

CONSTANTS = PhysicalConstants(h=_codata.h,
                              hbar=_codata.hbar,
                              k_B=_codata.k,
                              c=_codata.c,
                              eps0=_codata.epsilon_0,
                              mu0=_codata.mu_0,
                              Z_vac=math.sqrt(_codata.mu_0 / _codata.epsilon_0))

# Np -> dB for field attenuation constants
NP_TO_DB = 20.0 * math.log10(math.e)
