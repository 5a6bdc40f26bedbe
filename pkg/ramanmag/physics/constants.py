"""
Physical constants used across the laser and magnetometry models.
"""
from dataclasses import dataclass

import scipy.constants

# Electron gyromagnetic ratio of the NV ground state, inverted (T/Hz)
INV_GAMMA_E = 5.68e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant (J s), speed of light (m/s) and 1/gamma_e (T/Hz)"""

    h: float = scipy.constants.h
    c: float = scipy.constants.c
    inv_gamma_e: float = INV_GAMMA_E


DEFAULT_CONSTANTS = PhysicalConstants()


def frequency_from_wavelength(wavelength: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Optical frequency (Hz) of a vacuum wavelength given in metres"""
    return constants.c / wavelength
