"""Physical constants and experiment defaults shared across the package.

All quantities are SI.
"""
from math import factorial

from scipy import constants as _sc

EPSILON_0 = _sc.epsilon_0
C = _sc.c
H_PLANCK = _sc.h
K_BOLTZMANN = _sc.k

#: Largest supported |l| for Laguerre-Gaussian fields.
MAX_OAM = 10

#: l! for 0 <= l <= MAX_OAM, precomputed so field evaluation never overflows.
FACTORIALS = tuple(float(factorial(n)) for n in range(MAX_OAM + 1))

# Wavelengths of the up-conversion setup (m).
LAMBDA_PUMP = 795e-9
LAMBDA_SIGNAL = 1560e-9
LAMBDA_SFG = 525e-9
LAMBDA_SPDC_PUMP = 780e-9

# PPKTP extraordinary (z) indices near 23-40 C. Rounded literature values,
# used as config defaults only (no Sellmeier model).
N_PUMP = 1.842
N_SIGNAL = 1.816
N_SFG = 1.889

CRYSTAL_LENGTH = 10e-3
SFG_POLING_PERIOD = 9.375e-6
SPDC_POLING_PERIOD = 46.2e-6

#: Effective nonlinearity of first-order QPM PPKTP, (2/pi) * d33 with d33 ~ 15 pm/V.
D_EFF = 9.5e-12

CAVITY_WAIST = 33e-6
CIRCULATING_PUMP = 22.3

COINCIDENCE_WINDOW = 2e-9
