"""Morse-oscillator eigenfunctions and vibrational overlap (Franck-Condon) factors.

Radial convention: every wavefunction here is the reduced radial function
``u(r) = r R(r)``, normalised as ``int u^2 dr = 1`` (units m^-1/2). The overlap
``int R_e R_f r^2 dr`` is then simply ``int u_e u_f dr``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import QuadratureError
from .molecule import MolecularConstants
from .units import HBAR, Wavenumber, wavenumber_to_angular_frequency

DEFAULT_POINTS = 4001
CONVERGENCE_TOL = 1e-6

_RESCALE = 1e150


@dataclass(frozen=True)
class MorseWell:
    """Morse potential D_e (1 - exp(-a (r - r_e)))^2 matched to (omega_e, omega_e x_e)."""

    D_e: Wavenumber
    a: float  # 1/m
    r_e: float  # m
    lambda_morse: float
    nu_max: int
    reduced_mass: float  # kg

    @classmethod
    def from_constants(cls, c: MolecularConstants) -> "MorseWell":
        if not c.omega_e_x_e > 0:
            raise ValueError(f"{c.label}: Morse well needs omega_e_x_e > 0")
        lam = c.omega_e / (2.0 * c.omega_e_x_e)
        if not lam > 0.5:
            raise ValueError(f"{c.label}: no bound states (lambda = {lam})")
        wx = wavenumber_to_angular_frequency(float(c.omega_e_x_e))
        a = math.sqrt(2.0 * c.reduced_mass * wx / HBAR)
        return cls(
            D_e=Wavenumber(c.omega_e**2 / (4.0 * c.omega_e_x_e)),
            a=a,
            r_e=c.r_e,
            lambda_morse=lam,
            nu_max=math.floor(lam - 0.5),
            reduced_mass=c.reduced_mass,
        )

    def potential(self, r):
        """Potential energy in cm^-1 measured from the well bottom."""
        return self.D_e * (1.0 - np.exp(-self.a * (np.asarray(r) - self.r_e))) ** 2

    def energy(self, nu) -> np.ndarray:
        """Bound-state energy in cm^-1 above the well bottom."""
        v = np.asarray(nu) + 0.5
        return self.D_e * (1.0 - (self.lambda_morse - v) ** 2 / self.lambda_morse**2)


def scaled_laguerre(n: int, alpha, z) -> tuple[np.ndarray, np.ndarray]:
    """Generalised Laguerre L_n^alpha(z) by upward recurrence with overflow control.

    Returns ``(values, log_scale)`` such that ``L = values * exp(log_scale)``.
    """
    z = np.asarray(z, dtype=float)
    log_scale = np.zeros_like(z)
    prev = np.ones_like(z)
    if n == 0:
        return prev, log_scale
    cur = 1.0 + alpha - z
    for k in range(1, n):
        nxt = ((2 * k + 1 + alpha - z) * cur - (k + alpha) * prev) / (k + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            s = np.where(big, np.abs(cur), 1.0)
            cur = cur / s
            prev = prev / s
            log_scale = log_scale + np.log(s)
    return cur, log_scale


def morse_wavefunction(well: MorseWell, nu: int, r) -> np.ndarray:
    """Normalised bound eigenfunction u_nu(r) of the Morse well (m^-1/2).

    u = N z^s exp(-z/2) L_nu^{2s}(z), z = 2 lambda exp(-a (r - r_e)), s = lambda - nu - 1/2,
    N^2 = a nu! 2s / Gamma(2 lambda - nu).
    """
    if not 0 <= nu <= well.nu_max:
        raise ValueError(f"nu={nu} is not bound (0..{well.nu_max})")
    r = np.asarray(r, dtype=float)
    lam = well.lambda_morse
    s = lam - nu - 0.5
    if s <= 0:
        raise ValueError(f"nu={nu} sits at the dissociation limit")
    z = 2.0 * lam * np.exp(-well.a * (r - well.r_e))
    log_norm = 0.5 * (math.log(well.a) + gammaln(nu + 1) + math.log(2.0 * s) - gammaln(2.0 * lam - nu))
    lag, log_scale = scaled_laguerre(nu, 2.0 * s, z)
    with np.errstate(divide="ignore"):
        expo = log_norm + s * np.log(z) - 0.5 * z + log_scale
    return np.exp(expo) * lag


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    n_points: int

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_points)

    def refined(self) -> "RadialGrid":
        return RadialGrid(self.r_min, self.r_max, 2 * self.n_points - 1)

    @classmethod
    def for_wells(cls, *wells: MorseWell, n_points: int = DEFAULT_POINTS) -> "RadialGrid":
        """Uniform grid over [min(r_e - 5/a), max(r_e + 12/a)], lower end kept positive."""
        lo = min(w.r_e - 5.0 / w.a for w in wells)
        lo = max(lo, 0.25 * min(w.r_e for w in wells))
        hi = max(w.r_e + 12.0 / w.a for w in wells)
        if n_points % 2 == 0:
            n_points += 1
        return cls(lo, hi, n_points)

    @classmethod
    def for_level(cls, well: MorseWell, nu: int, density: float = (DEFAULT_POINTS - 1) / 17.0) -> "RadialGrid":
        """Grid wide enough for the exponential tail exp(-s a (r - r_e)) of level ``nu``.

        Near dissociation s = lambda - nu - 1/2 is small and the tail reaches far
        beyond r_e + 12/a; the outer edge is pushed to r_e + (12 + 16/s)/a at the
        same point density (points per 1/a) as the default grid.
        """
        s = well.lambda_morse - nu - 0.5
        lo = max(well.r_e - 5.0 / well.a, 0.25 * well.r_e)
        hi = well.r_e + (12.0 + 16.0 / s) / well.a
        n = int(math.ceil((hi - lo) * well.a * density)) + 1
        return cls(lo, hi, n + (n + 1) % 2)


def simpson_weights(grid: RadialGrid) -> np.ndarray:
    """Composite Simpson weights (dx/3)[1, 4, 2, ..., 4, 1] for an odd point count."""
    if grid.n_points % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of points")
    dr = (grid.r_max - grid.r_min) / (grid.n_points - 1)
    w = np.full(grid.n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * dr / 3.0


@lru_cache(maxsize=64)
def _wavefunction_table(well: MorseWell, n: int, grid: RadialGrid) -> np.ndarray:
    r = grid.r
    return np.array([morse_wavefunction(well, nu, r) for nu in range(n)])


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """Overlaps R[nu, nu'] = int u_{lower,nu} u_{upper,nu'} dr on a fixed grid."""

    values: np.ndarray
    grid: RadialGrid

    def R(self, nu: int, nu_prime: int) -> float:
        return float(self.values[nu, nu_prime])

    def franck_condon(self, nu: int, nu_prime: int) -> float:
        return self.R(nu, nu_prime) ** 2

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["nu", "nu_prime", "R", "R_squared"])
            for (i, j), v in np.ndenumerate(self.values):
                w.writerow([i, j, repr(float(v)), repr(float(v * v))])


def _overlaps_on(lower: MorseWell, upper: MorseWell, n_lower: int, n_upper: int, grid: RadialGrid) -> np.ndarray:
    a = _wavefunction_table(lower, n_lower, grid)
    b = _wavefunction_table(upper, n_upper, grid)
    return (a * simpson_weights(grid)) @ b.T


@lru_cache(maxsize=16)
def overlap_matrix(
    lower: MorseWell,
    upper: MorseWell,
    n_lower: int | None = None,
    n_upper: int | None = None,
    n_points: int = DEFAULT_POINTS,
    check_convergence: bool = True,
) -> OverlapMatrix:
    """Overlap matrix for nu < n_lower, nu' < n_upper (default: every bound level).

    With ``check_convergence`` the matrix is recomputed on a grid with half the
    spacing and :class:`QuadratureError` is raised if any entry moves by more
    than 1e-6.
    """
    n_lower = lower.nu_max + 1 if n_lower is None else n_lower
    n_upper = upper.nu_max + 1 if n_upper is None else n_upper
    if not (0 < n_lower <= lower.nu_max + 1 and 0 < n_upper <= upper.nu_max + 1):
        raise ValueError("requested vibrational range exceeds the bound states")
    grid = RadialGrid.for_wells(lower, upper, n_points=n_points)
    values = _overlaps_on(lower, upper, n_lower, n_upper, grid)
    if check_convergence:
        fine = _overlaps_on(lower, upper, n_lower, n_upper, grid.refined())
        drift = float(np.max(np.abs(fine - values)))
        if drift > CONVERGENCE_TOL:
            raise QuadratureError(
                f"overlap integrals not converged: grid refinement changed them by {drift:.3g}"
            )
    values.setflags(write=False)
    return OverlapMatrix(values, grid)


def franck_condon_overlap(lower: MorseWell, upper: MorseWell, nu: int, nu_prime: int, n_points: int = DEFAULT_POINTS) -> float:
    """Single overlap R_nu^nu' (dimensionless)."""
    if not 0 <= nu <= lower.nu_max or not 0 <= nu_prime <= upper.nu_max:
        raise ValueError("vibrational index outside the bound range")
    m = overlap_matrix(lower, upper, nu + 1, nu_prime + 1, n_points)
    return m.R(nu, nu_prime)
