import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rovodef.units import (
    AMU,
    C,
    E_A0,
    EPS0,
    HBAR,
    K_B,
    Wavenumber,
    angular_frequency_to_wavenumber,
    au_to_dipole,
    kelvin_to_wavenumber,
    photon_recoil_velocity,
    wavenumber_to_angular_frequency,
    wavenumber_to_wavelength,
)


def test_codata_constants():
    assert C == 299792458.0
    assert HBAR == pytest.approx(1.054571817e-34, rel=1e-10)
    assert K_B == pytest.approx(1.380649e-23, rel=1e-10)
    assert EPS0 == pytest.approx(8.8541878128e-12, rel=1e-9)
    assert AMU == pytest.approx(1.66053906660e-27, rel=1e-9)
    assert E_A0 == pytest.approx(8.4783536255e-30, rel=1e-9)


def test_zero_wavenumber():
    assert wavenumber_to_angular_frequency(0.0) == 0.0


def test_one_wavenumber():
    assert wavenumber_to_angular_frequency(1.0) == pytest.approx(2 * math.pi * 2.99792458e10, rel=1e-15)
    assert wavenumber_to_angular_frequency(1.0) == pytest.approx(1.8836e11, rel=1e-4)


def test_rotational_constant_in_rad_per_s():
    assert wavenumber_to_angular_frequency(0.155) == pytest.approx(2.920e10, rel=1e-3)


def test_array_conversion():
    w = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(wavenumber_to_angular_frequency(w), w * 2 * math.pi * C * 100)


@given(st.floats(min_value=1e-12, max_value=1e12))
def test_round_trip(w):
    back = angular_frequency_to_wavenumber(wavenumber_to_angular_frequency(w))
    assert back == pytest.approx(w, rel=1e-12)
    assert Wavenumber.from_angular_frequency(Wavenumber(w).angular_frequency) == pytest.approx(w, rel=1e-12)


def test_wavenumber_type():
    w = Wavenumber(2.5)
    assert isinstance(w, float)
    assert w + 1 == 3.5
    assert "cm^-1" in repr(w)
    with pytest.raises(ValueError):
        Wavenumber(math.inf)
    with pytest.raises(ValueError):
        Wavenumber(math.nan)


def test_wavelength():
    assert wavenumber_to_wavelength(18207.116) == pytest.approx(549.236e-9, rel=1e-5)
    with pytest.raises(ValueError):
        wavenumber_to_wavelength(0.0)


def test_thermal_energy():
    # k_B * 1000 K is about 695 cm^-1
    assert kelvin_to_wavenumber(1000.0) == pytest.approx(695.03, rel=1e-4)


def test_dipole_units():
    assert au_to_dipole(1.0) == E_A0


def test_recoil_limits():
    assert photon_recoil_velocity(math.inf, 1.0) == 0.0
    with pytest.raises(ValueError):
        photon_recoil_velocity(0.0, 1.0)
    with pytest.raises(ValueError):
        photon_recoil_velocity(549e-9, -1.0)


def test_recoil_na2():
    v = photon_recoil_velocity(549e-9, 45.98 * AMU)
    assert v == pytest.approx(1.57e-2, rel=0.01)
    # per 500 m/s this is the single-photon deflection reference
    assert 30e-6 <= v / 500.0 <= 40e-6


@given(st.floats(min_value=1e-27, max_value=1e-22))
def test_recoil_inverse_in_mass(M):
    assert photon_recoil_velocity(549e-9, 2 * M) == pytest.approx(photon_recoil_velocity(549e-9, M) / 2, rel=1e-14)
