"""Physical constants and the handful of unit conversions used across the package.

Spectroscopic quantities (term values, linewidths, couplings, detunings) are
carried in cm^-1 as :class:`Wavenumber`; everything that enters equations of
motion is SI.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.constants as spc

# CODATA values via scipy.constants
C = spc.c
HBAR = spc.hbar
H = spc.h
K_B = spc.k
EPS0 = spc.epsilon_0
AMU = spc.atomic_mass
E_A0 = spc.physical_constants["atomic unit of electric dipole mom."][0]  # C m
ANGSTROM = spc.angstrom

# 2*pi*c with c in cm/s: rad/s per cm^-1
_RAD_PER_S_PER_CM1 = 2.0 * math.pi * C * 100.0
# k_B/(h c) with c in cm/s: cm^-1 per kelvin
_CM1_PER_K = K_B / (H * C * 100.0)


class Wavenumber(float):
    """A spectroscopic quantity in cm^-1.

    Subclasses ``float`` so it drops into arithmetic and numpy unchanged, while
    keeping the unit visible in signatures and reprs.
    """

    __slots__ = ()

    def __new__(cls, value: float) -> "Wavenumber":
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"wavenumber must be finite, got {value!r}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"Wavenumber({float(self)!r} cm^-1)"

    @property
    def angular_frequency(self) -> float:
        return wavenumber_to_angular_frequency(self)

    @classmethod
    def from_angular_frequency(cls, omega: float) -> "Wavenumber":
        return cls(angular_frequency_to_wavenumber(omega))


def wavenumber_to_angular_frequency(w):
    """cm^-1 -> rad/s (omega = 2 pi c w). Accepts scalars or arrays."""
    if isinstance(w, (float, int)):
        return float(w) * _RAD_PER_S_PER_CM1
    return np.asarray(w, dtype=float) * _RAD_PER_S_PER_CM1


def angular_frequency_to_wavenumber(omega):
    """rad/s -> cm^-1."""
    if isinstance(omega, (float, int)):
        return float(omega) / _RAD_PER_S_PER_CM1
    return np.asarray(omega, dtype=float) / _RAD_PER_S_PER_CM1


def wavenumber_to_wavelength(w: float) -> float:
    """cm^-1 -> vacuum wavelength in meters."""
    if w <= 0:
        raise ValueError("wavelength undefined for non-positive wavenumber")
    return 1.0 / (100.0 * float(w))


def kelvin_to_wavenumber(T: float) -> float:
    """Thermal energy k_B T expressed in cm^-1."""
    return T * _CM1_PER_K


def amu_to_kg(m: float) -> float:
    return m * AMU


def au_to_dipole(d_au: float) -> float:
    """Dipole moment in atomic units (e a0) -> C m."""
    return d_au * E_A0


def photon_recoil_velocity(wavelength: float, mass: float) -> float:
    """Recoil velocity hbar k / M for one photon of the given wavelength (m, kg -> m/s)."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass!r}")
    if math.isinf(wavelength):
        return 0.0
    return HBAR * (2.0 * math.pi / wavelength) / mass
