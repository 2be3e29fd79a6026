"""Physical constants (CODATA, via scipy) and derived Planck-scale quantities.

Simulations run in dimensionless internal units (hbar = 1, reference mass 1).
The helpers here are only used when reproducing SI-scale estimates.
"""

from __future__ import annotations

import math

from scipy import constants as _c

HBAR = _c.hbar
G = _c.G
C = _c.c
M_NUCLEON = _c.m_p
M_ELECTRON = _c.m_e

# Reference QMUPL strength for a nucleon, m^-2 s^-1.
LAMBDA0_SI = 1e-2
# GRW single-particle collapse time, roughly the age of the universe (s).
GRW_SINGLE_PARTICLE_TIME = 1e17


def planck_length(hbar: float = HBAR, g: float = G, c: float = C) -> float:
    return math.sqrt(hbar * g / c**3)


def planck_mass(hbar: float = HBAR, g: float = G, c: float = C) -> float:
    return math.sqrt(hbar * c / g)


def planck_time(hbar: float = HBAR, g: float = G, c: float = C) -> float:
    return math.sqrt(hbar * g / c**5)


def compton_length(mass: float, hbar: float = HBAR, c: float = C) -> float:
    """Reduced Compton wavelength hbar / (m c)."""
    if mass <= 0:
        raise ValueError("mass must be positive")
    return hbar / (mass * c)
