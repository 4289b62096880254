"""Laser-molecule coupling: line list, widths, couplings, dressed shifts and deflection angles.

Conventions
-----------
* Detuning ``delta = (E_upper - E_lower) - omega_laser``, all in cm^-1; a
  positive detuning means the laser sits below the line.
* ``g`` is the peak coupling (mode function f = 1) in cm^-1.
* The laser profile is exp(-(x^2+y^2)/2w^2) cos(kz) in field amplitude, so the
  effective area is A = pi w^2 and the interaction length l = sqrt(A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PhysicsPreconditionError
from .molecule import LevelSet, Molecule, RovibronicLevel, ThermalEnsemble, level_energy
from .rotation import L_factor_sigma, honl_london
from .units import (
    C,
    EPS0,
    HBAR,
    Wavenumber,
    angular_frequency_to_wavenumber,
    au_to_dipole,
    photon_recoil_velocity,
    wavenumber_to_angular_frequency,
)
from .vibration import MorseWell, overlap_matrix

NONRESONANCE_THRESHOLD = 10.0


@dataclass(frozen=True)
class LaserField:
    """Standing-wave mode along z, Gaussian across x and y."""

    omega: float  # rad/s
    power: float  # W
    waist: float  # m

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError("laser angular frequency must be positive")
        if self.power < 0:
            raise ValueError("laser power must be non-negative")
        if not self.waist > 0:
            raise ValueError("waist must be positive")

    @classmethod
    def from_wavenumber(cls, wavenumber: float, power: float, waist: float) -> "LaserField":
        return cls(wavenumber_to_angular_frequency(float(wavenumber)), power, waist)

    @classmethod
    def from_interaction_length(cls, wavenumber: float, power: float, length: float) -> "LaserField":
        return cls.from_wavenumber(wavenumber, power, length / math.sqrt(math.pi))

    def tuned(self, wavenumber: float) -> "LaserField":
        return replace(self, omega=wavenumber_to_angular_frequency(float(wavenumber)))

    @property
    def wavenumber(self) -> Wavenumber:
        return Wavenumber(angular_frequency_to_wavenumber(self.omega))

    @property
    def wavelength(self) -> float:
        return 2 * math.pi * C / self.omega

    @property
    def k(self) -> float:
        return self.omega / C

    @property
    def area(self) -> float:
        return math.pi * self.waist**2

    @property
    def interaction_length(self) -> float:
        return math.sqrt(self.area)

    @property
    def intensity(self) -> float:
        """Peak energy flux P/A in W/m^2."""
        return self.power / self.area


def line_width(dipole_au, R, frequency, J, J_prime):
    """Partial natural linewidth of a rovibronic line, in cm^-1.

    Gamma = omega^3 d^2 R^2 S(J,J') / ((2J'+1) 3 pi eps0 hbar c^3).
    """
    omega = wavenumber_to_angular_frequency(frequency)
    d = au_to_dipole(np.asarray(dipole_au, dtype=float))
    S = honl_london(J, J_prime)
    rate = omega**3 * d**2 * np.asarray(R) ** 2 * S / ((2 * np.asarray(J_prime) + 1) * 3 * math.pi * EPS0 * HBAR * C**3)
    out = angular_frequency_to_wavenumber(rate)
    return Wavenumber(out) if np.ndim(out) == 0 else out


def _coupling(gamma_cm1, frequency, L, J, J_prime, intensity):
    """g in cm^-1 from the linewidth and the energy flux (array version)."""
    lam = 1.0 / (100.0 * np.asarray(frequency, dtype=float))
    gamma_rate = wavenumber_to_angular_frequency(gamma_cm1)
    S = honl_london(J, J_prime)
    g2 = 3 * lam**3 / (16 * math.pi**2 * HBAR * C) * gamma_rate * (2 * np.asarray(J_prime) + 1) * np.asarray(L) ** 2 / S * intensity
    return angular_frequency_to_wavenumber(np.sqrt(g2))


@dataclass(frozen=True)
class TransitionLine:
    lower: RovibronicLevel
    upper: RovibronicLevel
    frequency: Wavenumber
    Gamma: Wavenumber
    fc: float  # vibrational overlap R
    L: float
    S: int
    g: Wavenumber
    delta: Wavenumber

    @property
    def ratio(self) -> float:
        return math.inf if self.delta == 0 else self.g / abs(self.delta)

    def detuned(self, laser: LaserField) -> "TransitionLine":
        return replace(self, delta=Wavenumber(self.frequency - laser.wavenumber))


def coupling_g(line: TransitionLine, laser: LaserField) -> Wavenumber:
    """Peak coupling of ``line`` for the given laser power and beam area."""
    return Wavenumber(
        _coupling(line.Gamma, line.frequency, line.L, line.lower.J, line.upper.J, laser.intensity)
    )


@dataclass(frozen=True, eq=False)
class LineTable:
    """Column-wise M-resolved line list; rows sorted by (frequency, nu, J, M, nu', J')."""

    lower_state: str
    upper_state: str
    nu: np.ndarray
    J: np.ndarray
    M: np.ndarray
    nu_p: np.ndarray
    J_p: np.ndarray
    frequency: np.ndarray
    Gamma: np.ndarray
    R: np.ndarray
    L: np.ndarray
    S: np.ndarray
    g: np.ndarray

    def __len__(self) -> int:
        return len(self.nu)

    def delta(self, wavenumber: float) -> np.ndarray:
        return self.frequency - wavenumber

    def line(self, i: int, wavenumber: float) -> TransitionLine:
        return TransitionLine(
            lower=RovibronicLevel(self.lower_state, int(self.nu[i]), int(self.J[i]), int(self.M[i])),
            upper=RovibronicLevel(self.upper_state, int(self.nu_p[i]), int(self.J_p[i]), int(self.M[i])),
            frequency=Wavenumber(self.frequency[i]),
            Gamma=Wavenumber(self.Gamma[i]),
            fc=float(self.R[i]),
            L=float(self.L[i]),
            S=int(self.S[i]),
            g=Wavenumber(self.g[i]),
            delta=Wavenumber(self.frequency[i] - wavenumber),
        )

    def lines(self, wavenumber: float) -> list[TransitionLine]:
        return [self.line(i, wavenumber) for i in range(len(self))]

    def state_keys(self) -> np.ndarray:
        return np.stack([self.nu, self.J, self.M], axis=1)


def line_table(levels: LevelSet, molecule: Molecule, intensity: float, lo: float, hi: float) -> LineTable:
    """Every J' = J +- 1, M' = M line from ``levels`` with frequency in [lo, hi] (cm^-1)."""
    f, e = molecule.lower, molecule.upper
    if f.Omega != 0 or e.Omega != 0:
        raise NotImplementedError("line lists are implemented for Sigma-Sigma transitions")
    if len(levels) == 0:
        raise ValueError("no lower levels supplied")
    pairs = np.unique(np.stack([levels.nu, levels.J], axis=1), axis=0)
    nu_l, J_l = pairs[:, 0], pairs[:, 1]
    E_l = np.asarray(level_energy(f, nu_l, J_l), dtype=float)
    nu_up = np.arange(e.nu_max + 1)

    cand = []
    for dJ in (+1, -1):
        Jp = J_l + dJ
        ok = Jp >= 0
        E_u = np.asarray(level_energy(e, nu_up[None, :], np.where(ok, Jp, 0)[:, None]), dtype=float)
        freq = E_u - E_l[:, None]
        hit = (freq >= lo) & (freq <= hi) & ok[:, None]
        i, j = np.nonzero(hit)
        cand.append((i, nu_up[j], Jp[i], freq[i, j]))
    pi = np.concatenate([c[0] for c in cand])
    nu_p = np.concatenate([c[1] for c in cand])
    J_p = np.concatenate([c[2] for c in cand])
    freq = np.concatenate([c[3] for c in cand])

    n_lower = int(nu_l.max()) + 1
    overlaps = overlap_matrix(MorseWell.from_constants(f), MorseWell.from_constants(e), n_lower, e.nu_max + 1)

    # expand each (nu, J) -> (nu', J') line over the M sublevels present in ``levels``
    rows = []
    for k in range(pi.size):
        nu, J = int(nu_l[pi[k]]), int(J_l[pi[k]])
        sel = (levels.nu == nu) & (levels.J == J)
        M = np.unique(levels.M[sel])
        M = M[np.abs(M) <= J_p[k]]
        for m in M:
            rows.append((nu, J, int(m), int(nu_p[k]), int(J_p[k]), float(freq[k])))
    if not rows:
        empty_i = np.array([], dtype=int)
        empty_f = np.array([], dtype=float)
        return LineTable(f.label, e.label, empty_i, empty_i, empty_i, empty_i, empty_i,
                         empty_f, empty_f, empty_f, empty_f, empty_i, empty_f)
    arr = np.array(rows, dtype=float)
    order = np.lexsort((arr[:, 4], arr[:, 3], arr[:, 2], arr[:, 1], arr[:, 0], arr[:, 5]))
    arr = arr[order]
    nu, J, M, nu_p, J_p = (arr[:, c].astype(int) for c in range(5))
    freq = arr[:, 5]
    R = overlaps.values[nu, nu_p]
    L = L_factor_sigma(J, M, J_p)
    S = honl_london(J, J_p)
    Gamma = line_width(molecule.dipole_au, R, freq, J, J_p)
    g = _coupling(Gamma, freq, L, J, J_p, intensity)
    return LineTable(f.label, e.label, nu, J, M, nu_p, J_p, freq, np.asarray(Gamma), R, L, np.asarray(S), g)


def build_line_list(levels: LevelSet | ThermalEnsemble, molecule: Molecule, laser: LaserField, window: float) -> list[TransitionLine]:
    """Dipole-allowed lines within +-window (cm^-1) of the laser, each with Gamma, R, L, S, g and delta."""
    if isinstance(levels, ThermalEnsemble):
        levels = _populated_levels(levels)
    w0 = float(laser.wavenumber)
    table = line_table(levels, molecule, laser.intensity, w0 - window, w0 + window)
    return table.lines(w0)


def _populated_levels(ensemble: ThermalEnsemble) -> LevelSet:
    keep = ensemble.weights > 0
    lv = ensemble.levels
    return LevelSet(lv.state, lv.Omega, lv.nu[keep], lv.J[keep], lv.M[keep], lv.energy[keep])


def _dominant_index(g, delta, nu_p) -> int:
    """argmax g/|delta|; ties broken by smaller |delta|, then lower nu'."""
    g = np.asarray(g, dtype=float)
    ad = np.abs(np.asarray(delta, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ad == 0, np.inf, g / ad)
    order = np.lexsort((np.asarray(nu_p), ad, -ratio))
    return int(order[0])


def select_dominant_transition(lower: RovibronicLevel, lines: list[TransitionLine]) -> TransitionLine | None:
    """The line of ``lower`` with the largest g/|delta|, or ``None`` if the state is unaffected."""
    mine = [ln for ln in lines if ln.lower.key == lower.key]
    if not mine:
        return None
    i = _dominant_index([ln.g for ln in mine], [ln.delta for ln in mine], [ln.upper.nu for ln in mine])
    return mine[i]


def dressed_shift(g, delta, f_mode):
    """Light shift of the lower dressed state relative to the bare level.

    sign(delta) [sqrt(g^2 f^2 + delta^2/4) - |delta|/2], in the units of g and delta.
    """
    f_mode = np.asarray(f_mode, dtype=float)
    if np.any(np.abs(f_mode) > 1):
        raise ValueError("mode function must lie in [-1, 1]")
    delta = np.asarray(delta, dtype=float)
    g = np.asarray(g, dtype=float)
    sign = np.where(delta < 0, -1.0, 1.0)
    gf2 = g**2 * f_mode**2
    # rationalised form of sqrt(gf2 + delta^2/4) - |delta|/2, free of cancellation
    denom = np.sqrt(gf2 + delta**2 / 4.0) + np.abs(delta) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        out = sign * np.where(denom > 0, gf2 / denom, 0.0)
    return float(out) if out.ndim == 0 else out


def is_nonresonant(g, delta, threshold: float = NONRESONANCE_THRESHOLD):
    """|delta| > threshold * g (strict)."""
    out = np.abs(np.asarray(delta, dtype=float)) > threshold * np.asarray(g, dtype=float)
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DressedState:
    lower: RovibronicLevel
    line: TransitionLine

    @property
    def sign(self) -> int:
        return -1 if self.line.delta < 0 else 1

    def shift(self, f_mode):
        return dressed_shift(self.line.g, self.line.delta, f_mode)


@dataclass(frozen=True)
class Deflection:
    alpha: float  # rad
    raman_nath_bound: float  # lambda / l
    raman_nath_ok: bool


def closed_form_angle(g, delta, laser: LaserField, v_x, mass):
    """v_rec g^2 l / (v_x^2 delta) with g, delta in cm^-1 (converted to rad/s)."""
    v_rec = photon_recoil_velocity(laser.wavelength, mass)
    g_w = wavenumber_to_angular_frequency(np.asarray(g, dtype=float))
    d_w = wavenumber_to_angular_frequency(np.asarray(delta, dtype=float))
    return v_rec * g_w**2 * laser.interaction_length / (np.asarray(v_x, dtype=float) ** 2 * d_w)


def deflection_angle(line: TransitionLine, laser: LaserField, v_x: float, mass: float,
                     threshold: float = NONRESONANCE_THRESHOLD) -> Deflection:
    """Closed-form deflection at the steepest point of the standing wave (sin 2kz = 1)."""
    if not v_x > 0:
        raise ValueError("longitudinal velocity must be positive")
    if not is_nonresonant(line.g, line.delta, threshold):
        raise PhysicsPreconditionError(
            f"is_nonresonant violated: |delta| = {abs(line.delta):.4g} cm^-1 <= {threshold:g} g = {threshold * line.g:.4g} cm^-1"
        )
    alpha = float(closed_form_angle(line.g, line.delta, laser, v_x, mass))
    bound = laser.wavelength / laser.interaction_length
    return Deflection(alpha, bound, abs(alpha) < bound)


@dataclass(frozen=True, eq=False)
class ScanResult:
    """One row per (laser setting, lower state) with a candidate line within the line window."""

    omega_cm1: np.ndarray
    state_nu: np.ndarray
    state_J: np.ndarray
    state_M: np.ndarray
    alpha_rad: np.ndarray
    masked: np.ndarray
    g_cm1: np.ndarray
    delta_cm1: np.ndarray
    upper_nu: np.ndarray
    upper_J: np.ndarray
    grid: np.ndarray = field(repr=False)
    lines: LineTable = field(repr=False)

    COLUMNS = ("omega_cm1", "state_nu", "state_J", "state_M", "alpha_rad", "masked",
               "g_cm1", "delta_cm1", "upper_nu", "upper_J")

    def __len__(self) -> int:
        return len(self.omega_cm1)

    def states(self) -> list[tuple[int, int, int]]:
        keys = {(int(a), int(b), int(c)) for a, b, c in zip(self.state_nu, self.state_J, self.state_M)}
        return sorted(keys)

    def curve(self, nu: int, J: int, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        sel = (self.state_nu == nu) & (self.state_J == J) & (self.state_M == M)
        return self.omega_cm1[sel], self.alpha_rad[sel], self.masked[sel]

    def at(self, index: int) -> np.ndarray:
        """Row indices belonging to grid point ``index``."""
        return np.flatnonzero(self.omega_cm1 == self.grid[index])


def scan_frequencies(
    ensemble: ThermalEnsemble,
    molecule: Molecule,
    laser: LaserField,
    omega_range: tuple[float, float],
    n_points: int,
    line_window: float,
    v_x: float,
    threshold: float = NONRESONANCE_THRESHOLD,
) -> ScanResult:
    """Deflection angle of every participating state across a laser-frequency grid.

    A populated state participates if one of its lines lies inside ``omega_range``
    (absolute cm^-1). At each grid point its dominant line is picked among the
    lines within ``line_window`` of the laser; points failing the nonresonance
    test are kept with ``masked = 1``.
    """
    if n_points < 2:
        raise ValueError("a scan needs at least two points")
    lo, hi = map(float, omega_range)
    if not hi > lo:
        raise ValueError("scan range must be increasing")
    grid = np.linspace(lo, hi, n_points)
    levels = _populated_levels(ensemble)
    table = line_table(levels, molecule, laser.intensity, lo - line_window, hi + line_window)

    inside = (table.frequency >= lo) & (table.frequency <= hi)
    participating = np.unique(table.state_keys()[inside], axis=0)
    key_all = table.state_keys()

    cols: dict[str, list[np.ndarray]] = {c: [] for c in ScanResult.COLUMNS}
    pt_idx: list[np.ndarray] = []
    for nu, J, M in participating:
        idx = np.flatnonzero((key_all[:, 0] == nu) & (key_all[:, 1] == J) & (key_all[:, 2] == M))
        delta = table.frequency[idx][None, :] - grid[:, None]  # (n_points, n_lines)
        near = np.abs(delta) <= line_window
        has = near.any(axis=1)
        if not has.any():
            continue
        g = table.g[idx]
        with np.errstate(divide="ignore"):
            ratio = np.where(near, np.where(delta == 0, np.inf, g[None, :] / np.abs(delta)), -1.0)
        nu_p = np.broadcast_to(table.nu_p[idx][None, :], ratio.shape)
        best = np.lexsort((nu_p, np.abs(delta), -ratio), axis=-1)[:, 0]
        pts = np.flatnonzero(has)
        b = best[pts]
        d = delta[pts, b]
        gg = g[b]
        masked = ~is_nonresonant(gg, d, threshold)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(masked, np.nan, closed_form_angle(gg, np.where(d == 0, 1.0, d), laser, v_x, molecule.mass))
        n = pts.size
        pt_idx.append(pts)
        cols["omega_cm1"].append(grid[pts])
        cols["state_nu"].append(np.full(n, nu))
        cols["state_J"].append(np.full(n, J))
        cols["state_M"].append(np.full(n, M))
        cols["alpha_rad"].append(alpha)
        cols["masked"].append(np.asarray(masked, dtype=bool))
        cols["g_cm1"].append(gg)
        cols["delta_cm1"].append(d)
        cols["upper_nu"].append(table.nu_p[idx][b])
        cols["upper_J"].append(table.J_p[idx][b])

    if not pt_idx:
        arrays = {c: np.array([], dtype=bool if c == "masked" else float) for c in ScanResult.COLUMNS}
    else:
        order = np.argsort(np.concatenate(pt_idx), kind="stable")
        arrays = {c: np.concatenate(v)[order] for c, v in cols.items()}
    return ScanResult(grid=grid, lines=table, **arrays)
