"""Physical constants and unit conversions.

All CODATA values are taken from scipy.constants. Energies are stored in SI
Joules throughout the package; the radial integrators work internally in
Hartree atomic units where the equations are dimensionless.
"""

from scipy import constants as _const

# Fundamental constants (SI)
H_PLANCK = _const.h                     # J s
HBAR = _const.hbar                      # J s
C_LIGHT = _const.c                      # m / s
E_CHARGE = _const.e                     # C
EPSILON_0 = _const.epsilon_0            # F / m
M_E = _const.m_e                        # kg
ALPHA_FS = _const.alpha                 # fine-structure constant
U_KG = _const.physical_constants["atomic mass constant"][0]   # kg
A_0 = _const.physical_constants["Bohr radius"][0]             # m
MU_B = _const.physical_constants["Bohr magneton"][0]          # J / T
RYDBERG_INF = _const.physical_constants["Rydberg constant"][0]  # 1 / m

# Derived
HARTREE = 2.0 * H_PLANCK * C_LIGHT * RYDBERG_INF   # J
COULOMB_FACTOR = E_CHARGE**2 / (4.0 * _const.pi * EPSILON_0)  # J m

GHZ = 1.0e9 * H_PLANCK   # J per GHz of frequency
MHZ = 1.0e6 * H_PLANCK


def joule_to_ghz(energy: float) -> float:
    """Convert an energy in Joules to a frequency in GHz (E / h)."""
    return energy / GHZ


def joule_to_au(energy: float) -> float:
    """Convert an energy in Joules to Hartree atomic units."""
    return energy / HARTREE


def joule_to_ev(energy: float) -> float:
    """Convert an energy in Joules to electron volts."""
    return energy / _const.e
