"""Electronic-state constants, rovibronic level enumeration and thermal populations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

import numpy as np
import yaml

from .errors import ConfigError
from .units import ANGSTROM, AMU, Wavenumber, kelvin_to_wavenumber

CONSTANTS_KEYS = (
    "label",
    "E_el_cm1",
    "omega_e_cm1",
    "omega_e_x_e_cm1",
    "B_e_cm1",
    "alpha_e_cm1",
    "D_cm1",
    "Omega",
    "r_e_angstrom",
    "reduced_mass_amu",
    "dipole_au",
)


@dataclass(frozen=True)
class MolecularConstants:
    """Spectroscopic constants of one electronic state.

    ``B`` is vibration dependent, ``B_nu = B_e - alpha_e (nu + 1/2)``; the
    centrifugal constant ``D`` is taken as nu independent.
    """

    label: str
    E_el: Wavenumber
    omega_e: Wavenumber
    omega_e_x_e: Wavenumber
    B_e: Wavenumber
    r_e: float  # m
    reduced_mass: float  # kg
    alpha_e: Wavenumber = Wavenumber(0.0)
    D: Wavenumber = Wavenumber(0.0)
    Omega: int = 0

    def __post_init__(self) -> None:
        for name in ("E_el", "omega_e", "omega_e_x_e", "B_e", "alpha_e", "D"):
            object.__setattr__(self, name, Wavenumber(getattr(self, name)))
        if not self.omega_e > 0:
            raise ValueError(f"{self.label}: omega_e must be positive")
        if self.omega_e_x_e < 0:
            raise ValueError(f"{self.label}: omega_e_x_e must be non-negative")
        if not self.B_e > 0:
            raise ValueError(f"{self.label}: B_e must be positive")
        if self.D < 0:
            raise ValueError(f"{self.label}: D must be non-negative")
        if self.omega_e_x_e > 0 and not 2 * self.omega_e_x_e < self.omega_e:
            raise ValueError(f"{self.label}: 2 omega_e x_e >= omega_e, no bound Morse well")
        if not (self.r_e > 0 and self.reduced_mass > 0):
            raise ValueError(f"{self.label}: r_e and reduced_mass must be positive")

    @property
    def nu_max(self) -> int:
        """Highest bound vibrational level of the matching Morse well."""
        if self.omega_e_x_e == 0:
            return 10**9
        return math.floor(self.omega_e / (2 * self.omega_e_x_e) - 0.5)

    def B(self, nu):
        return self.B_e - self.alpha_e * (np.asarray(nu) + 0.5)


@dataclass(frozen=True)
class Molecule:
    """The two electronic states coupled by the laser plus the f->e transition dipole."""

    lower: MolecularConstants
    upper: MolecularConstants
    dipole_au: float
    mass: float  # total mass, kg

    @property
    def electronic_offset(self) -> Wavenumber:
        """Electronic term separation used as the frequency reference ("E_el")."""
        return Wavenumber(self.upper.E_el - self.lower.E_el)


def _constants_from_doc(doc: dict, source: str) -> tuple[MolecularConstants, float | None]:
    missing = [k for k in CONSTANTS_KEYS if k not in doc]
    unknown = [k for k in doc if k not in CONSTANTS_KEYS]
    if missing or unknown:
        raise ConfigError(f"{source}: missing keys {missing}, unknown keys {unknown}")
    try:
        c = MolecularConstants(
            label=str(doc["label"]),
            E_el=doc["E_el_cm1"],
            omega_e=doc["omega_e_cm1"],
            omega_e_x_e=doc["omega_e_x_e_cm1"],
            B_e=doc["B_e_cm1"],
            alpha_e=doc["alpha_e_cm1"] or 0.0,
            D=doc["D_cm1"] or 0.0,
            Omega=int(doc["Omega"]),
            r_e=float(doc["r_e_angstrom"]) * ANGSTROM,
            reduced_mass=float(doc["reduced_mass_amu"]) * AMU,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    dipole = doc["dipole_au"]
    return c, (None if dipole is None else float(dipole))


def load_molecule(path: str | Path | None = None, mass_amu: float | None = None) -> Molecule:
    """Read a two-document constants file (lower state first, upper second).

    With ``path=None`` the bundled Na2 file is used. The total mass defaults to
    four times the reduced mass, which is exact for homonuclear molecules.
    """
    if path is None:
        text = resources.files("rovodef.data").joinpath("na2_constants.yaml").read_text()
        source = "bundled na2_constants.yaml"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"molecular constants file not found: {p}")
        text = p.read_text()
        source = str(p)
    try:
        docs = [d for d in yaml.safe_load_all(text) if d is not None]
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if len(docs) != 2:
        raise ConfigError(f"{source}: expected 2 documents (lower, upper), found {len(docs)}")
    lower, dipole = _constants_from_doc(docs[0], source)
    upper, _ = _constants_from_doc(docs[1], source)
    if dipole is None or dipole <= 0:
        raise ConfigError(f"{source}: lower-state document needs a positive dipole_au")
    mass = 4 * lower.reduced_mass if mass_amu is None else mass_amu * AMU
    return Molecule(lower=lower, upper=upper, dipole_au=dipole, mass=mass)


def level_energy(c: MolecularConstants, nu, J, Omega: int | None = None):
    """Term value E(nu, J) in cm^-1; vectorised over ``nu`` and ``J``.

    E = E_el + we(nu+1/2) - wexe(nu+1/2)^2 + B_nu x - D x^2, x = J(J+1) - Omega^2.
    """
    Omega = c.Omega if Omega is None else Omega
    nu_a = np.asarray(nu)
    J_a = np.asarray(J)
    if np.any(nu_a < 0) or np.any(nu_a > c.nu_max):
        raise ValueError(f"{c.label}: nu outside bound range 0..{c.nu_max}")
    if np.any(J_a < abs(Omega)):
        raise ValueError(f"{c.label}: J < |Omega| = {abs(Omega)}")
    v = nu_a + 0.5
    x = J_a * (J_a + 1.0) - Omega**2
    E = c.E_el + c.omega_e * v - c.omega_e_x_e * v**2 + c.B(nu_a) * x - c.D * x**2
    if np.ndim(E) == 0:
        return Wavenumber(E)
    return E


@dataclass(frozen=True)
class RovibronicLevel:
    state: str
    nu: int
    J: int
    M: int
    Omega: int = 0

    def __post_init__(self) -> None:
        if self.nu < 0 or self.J < 0:
            raise ValueError("nu and J must be non-negative")
        if abs(self.M) > self.J:
            raise ValueError(f"|M| > J in {self}")
        if self.J < abs(self.Omega):
            raise ValueError(f"J < |Omega| in {self}")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.nu, self.J, self.M)


@dataclass(frozen=True, eq=False)
class LevelSet:
    """M-resolved levels of one electronic state, stored column-wise and sorted by energy."""

    state: str
    Omega: int
    nu: np.ndarray
    J: np.ndarray
    M: np.ndarray
    energy: np.ndarray  # cm^-1

    def __len__(self) -> int:
        return len(self.nu)

    def __iter__(self) -> Iterator[RovibronicLevel]:
        for i in range(len(self)):
            yield self.level(i)

    def level(self, i: int) -> RovibronicLevel:
        return RovibronicLevel(self.state, int(self.nu[i]), int(self.J[i]), int(self.M[i]), self.Omega)

    def index_of(self, nu: int, J: int, M: int) -> int:
        hit = np.flatnonzero((self.nu == nu) & (self.J == J) & (self.M == M))
        if hit.size == 0:
            raise KeyError(f"level nu={nu} J={J} M={M} not in set")
        return int(hit[0])


def enumerate_levels(c: MolecularConstants, max_nu: int, max_J: int) -> LevelSet:
    """All (nu, J, M) with nu < max_nu, |Omega| <= J < max_J, |M| <= J, sorted by energy."""
    if max_nu < 0 or max_J < 0:
        raise ValueError("truncations must be non-negative")
    max_nu = min(max_nu, c.nu_max + 1)
    nus, Js, Ms = [], [], []
    for J in range(abs(c.Omega), max_J):
        m = np.arange(-J, J + 1)
        for nu in range(max_nu):
            nus.append(np.full(m.size, nu))
            Js.append(np.full(m.size, J))
            Ms.append(m)
    if not nus:
        empty = np.array([], dtype=int)
        return LevelSet(c.label, c.Omega, empty, empty, empty, np.array([], dtype=float))
    nu = np.concatenate(nus)
    J = np.concatenate(Js)
    M = np.concatenate(Ms)
    E = np.asarray(level_energy(c, nu, J), dtype=float)
    order = np.lexsort((M, J, nu, E))
    return LevelSet(c.label, c.Omega, nu[order], J[order], M[order], E[order])


@dataclass(frozen=True, eq=False)
class ThermalEnsemble:
    """Boltzmann populations of M-resolved levels."""

    levels: LevelSet
    temperature: float | None
    max_nu: int
    max_J: int
    weights: np.ndarray = field(repr=False)

    def weight(self, nu: int, J: int, M: int) -> float:
        return float(self.weights[self.levels.index_of(nu, J, M)])

    def populated(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def restricted(self, mask) -> "ThermalEnsemble":
        """Renormalised ensemble keeping only levels where ``mask`` is true."""
        w = np.where(np.asarray(mask, dtype=bool), self.weights, 0.0)
        total = w.sum()
        if total <= 0:
            raise ValueError("restriction leaves no populated level")
        return ThermalEnsemble(self.levels, self.temperature, self.max_nu, self.max_J, w / total)

    def pure(self, nu: int, J: int, M: int) -> "ThermalEnsemble":
        i = self.levels.index_of(nu, J, M)
        w = np.zeros(len(self.levels))
        w[i] = 1.0
        return ThermalEnsemble(self.levels, None, self.max_nu, self.max_J, w)


def thermal_weights(levels: LevelSet, T: float, max_nu: int | None = None, max_J: int | None = None) -> ThermalEnsemble:
    """Per-M Boltzmann weights exp(-(E - E_min)/k_B T), normalised to one."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T!r}")
    if len(levels) == 0:
        raise ValueError("empty level list")
    E = levels.energy
    w = np.exp(-(E - E.min()) / kelvin_to_wavenumber(T))
    w /= w.sum()
    return ThermalEnsemble(
        levels,
        float(T),
        int(levels.nu.max()) + 1 if max_nu is None else max_nu,
        int(levels.J.max()) + 1 if max_J is None else max_J,
        w,
    )
