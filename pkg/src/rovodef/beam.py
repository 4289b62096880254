"""Monte Carlo transit of a molecular beam through the standing wave.

Each molecule is integrated on its own: a dimensionless time grid
s = x / w in [-4, 4] is shared by all molecules, so every transcendental that
depends on time is evaluated once, and per-molecule factors are evaluated with
scalar ``math`` calls. The remaining per-step arithmetic is IEEE-exact
(+, *, /, sqrt), which keeps results identical however molecules are batched.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .interaction import (
    NONRESONANCE_THRESHOLD,
    LaserField,
    LineTable,
    TransitionLine,
    _dominant_index,
    _populated_levels,
    is_nonresonant,
    line_table,
)
from .molecule import Molecule, RovibronicLevel, ThermalEnsemble
from .units import HBAR, photon_recoil_velocity, wavenumber_to_angular_frequency

S_MAX = 4.0
DEFAULT_STEPS = 2000
CHUNK = 256


@dataclass(frozen=True)
class BeamParameters:
    v0: float = 500.0
    sigma_v_rel: float = 0.0
    z_center: float = 0.0  # m
    delta_z: float = 0.0  # m
    n_molecules: int = 10_000
    rng_seed: int = 0
    emission: bool = True
    diffraction: bool = True
    n_steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        if not self.v0 > 0:
            raise ValueError("v0 must be positive")
        if self.sigma_v_rel < 0 or self.delta_z < 0:
            raise ValueError("spreads must be non-negative")
        if self.n_molecules < 1:
            raise ValueError("need at least one molecule")
        if self.n_steps < 2:
            raise ValueError("need at least two time steps")

    @classmethod
    def from_phases(cls, laser: LaserField, two_kz: float = math.pi / 2, two_k_delta_z: float = 0.0, **kw) -> "BeamParameters":
        """Build from standing-wave phases 2kz and 2k dz instead of lengths."""
        k = laser.k
        return cls(z_center=two_kz / (2 * k), delta_z=two_k_delta_z / (2 * k), **kw)


@dataclass(frozen=True)
class TrajectoryResult:
    level: tuple[int, int, int]
    v_x: float
    z: float
    v_z: float  # final transverse velocity, m/s
    angle: float  # v_z / v_x
    n_spontaneous_emissions: int
    interrupted: bool
    recoil_kicks: tuple[float, ...] = ()
    displacement: float = 0.0  # transverse motion caused by the light during the transit, m
    step_warning: bool = False
    v_z0: float = 0.0  # transverse velocity on entry (diffraction kick), m/s


def diffraction_width(delta_z: float, mass: float) -> float:
    """Transverse velocity spread hbar / (2 M dz) from confining the beam to dz.

    ``delta_z == 0`` means no confinement is modelled and returns 0 (no kick).
    """
    if delta_z < 0:
        raise ValueError("delta_z must be non-negative")
    if not mass > 0:
        raise ValueError("mass must be positive")
    if delta_z == 0 or math.isinf(delta_z):
        return 0.0
    return HBAR / (2.0 * mass * delta_z)


@lru_cache(maxsize=8)
def _time_grid(n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    s = np.linspace(-S_MAX, S_MAX, n_steps + 1)
    return s, np.exp(-s * s)


def spontaneous_emission_probability(g: float, delta: float, Gamma: float, interaction_time: float,
                                     mode_factor: float = 1.0, n_steps: int = DEFAULT_STEPS) -> float:
    """Expected number of spontaneous emissions during one passage.

    Integrates Gamma rho_ee(t), rho_ee = g^2 f^2 / (delta^2 + 2 g^2 f^2 + Gamma^2/4),
    with f(t)^2 = mode_factor exp(-t^2/tau^2) and tau = interaction_time / sqrt(pi),
    i.e. the Gaussian passage whose effective duration is ``interaction_time``.
    g, delta and Gamma in cm^-1; interaction_time in s.
    """
    if g == 0:
        return 0.0
    gw, dw, Gw = (wavenumber_to_angular_frequency(float(x)) for x in (g, delta, Gamma))
    s, e = _time_grid(n_steps)
    f2 = mode_factor * e
    rho = gw * gw * f2 / (dw * dw + 2 * gw * gw * f2 + Gw * Gw / 4)
    tau = interaction_time / math.sqrt(math.pi)
    return float(Gw * np.trapezoid(rho, s) * tau)


@dataclass(frozen=True)
class _LineParams:
    g: float  # rad/s
    delta: float  # rad/s
    Gamma: float  # rad/s


def _propagate(p: _LineParams, sin2kz: float, cos_kz_sq: float, v_x: float, v_z0: float,
               laser_k: float, waist: float, mass: float, v_rec: float, n_steps: int,
               uniforms: np.ndarray | None, recoil_sign: float) -> TrajectoryResult:
    s, e = _time_grid(n_steps)
    dt = (2 * S_MAX / n_steps) * waist / v_x
    if p.g == 0:
        v = v_z0
        return TrajectoryResult((0, 0, 0), v_x, 0.0, v, v / v_x, 0, False, (), 0.0, False, v_z0)

    g2 = p.g * p.g
    half_d2 = p.delta * p.delta / 4.0
    sign = -1.0 if p.delta < 0 else 1.0
    f2 = e * cos_kz_sq
    root = np.sqrt(g2 * f2 + half_d2)
    pref = sign * HBAR * g2 * laser_k * sin2kz / (2.0 * mass)
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = np.where(root > 0, pref * e / root, 0.0)
    seg = (acc[:-1] + acc[1:]) * (0.5 * dt)
    impulse = np.concatenate(([0.0], np.cumsum(seg)))  # velocity gained up to each grid time

    # Verlet self-check: the same integral on every other point
    coarse = float(np.sum(acc[:-1:2] + acc[2::2]) * dt) if n_steps % 2 == 0 else float(impulse[-1])
    warn = abs(coarse - impulse[-1]) > 0.01 * abs(impulse[-1]) if impulse[-1] != 0 else False

    stop = n_steps
    kicks: tuple[float, ...] = ()
    if uniforms is not None and p.Gamma > 0:
        rho = g2 * f2 / (p.delta * p.delta + 2 * g2 * f2 + p.Gamma * p.Gamma / 4.0)
        prob = p.Gamma * 0.5 * (rho[:-1] + rho[1:]) * dt
        hit = np.flatnonzero(uniforms < prob)
        if hit.size:
            stop = int(hit[0])
            kicks = (recoil_sign * v_rec,)

    if stop < n_steps:
        coherent = 0.5 * (impulse[stop] + impulse[stop + 1])
        v_t = np.where(np.arange(n_steps + 1) <= stop, impulse, coherent) + np.where(np.arange(n_steps + 1) > stop, kicks[0], 0.0)
    else:
        coherent = impulse[-1]
        v_t = impulse
    v_final = v_z0 + coherent + sum(kicks)
    # free drift v_z0 * T is excluded: only light-induced motion can break the fixed-z picture
    disp = float(np.sum(v_t[:-1] + v_t[1:]) * 0.5 * dt)
    return TrajectoryResult((0, 0, 0), v_x, 0.0, v_final, v_final / v_x,
                            len(kicks), bool(kicks), kicks, disp, bool(warn), v_z0)


def integrate_trajectory(line: TransitionLine | None, laser: LaserField, mass: float, v_x: float, z: float,
                         v_z0: float = 0.0, n_steps: int = DEFAULT_STEPS,
                         rng: np.random.Generator | None = None) -> TrajectoryResult:
    """Transverse velocity picked up by one molecule crossing the laser at fixed z.

    Solves M dv_z/dt = -d E_dress/dz with f = exp(-x^2/2w^2) cos kz, x = v_x t,
    over t in [-4w/v_x, 4w/v_x] (velocity Verlet, which reduces to the
    trapezoid rule while z is frozen). With ``rng`` each step may end the
    coherent kick by a spontaneous emission followed by one +-hbar k/M recoil.
    ``line=None`` is an unaffected molecule.
    """
    if not v_x > 0:
        raise ValueError("v_x must be positive")
    level = (0, 0, 0) if line is None else line.lower.key
    params = _line_params(line)
    uniforms = None
    sign = 1.0
    if rng is not None:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        uniforms = rng.random(n_steps)
    kz = laser.k * z
    res = _propagate(params, math.sin(2 * kz), math.cos(kz) ** 2, v_x, v_z0, laser.k, laser.waist, mass,
                     photon_recoil_velocity(laser.wavelength, mass), n_steps, uniforms, sign)
    return _with_state(res, level, z)


def _line_params(line: TransitionLine | None) -> _LineParams:
    if line is None:
        return _LineParams(0.0, 0.0, 0.0)
    return _LineParams(
        wavenumber_to_angular_frequency(float(line.g)),
        wavenumber_to_angular_frequency(float(line.delta)),
        wavenumber_to_angular_frequency(float(line.Gamma)),
    )


def _with_state(r: TrajectoryResult, level, z: float) -> TrajectoryResult:
    return TrajectoryResult(tuple(int(x) for x in level), r.v_x, z, r.v_z, r.angle, r.n_spontaneous_emissions,
                            r.interrupted, r.recoil_kicks, r.displacement, r.step_warning, r.v_z0)


@dataclass(frozen=True, eq=False)
class DetectorHistogram:
    edges: np.ndarray  # rad
    total: np.ndarray
    by_state: dict = field(default_factory=dict)  # (nu, J, M) or "unaffected" -> counts

    @classmethod
    def from_angles(cls, angles: np.ndarray, tags: list, bins: int = 200, range_: tuple[float, float] | None = None) -> "DetectorHistogram":
        angles = np.asarray(angles, dtype=float)
        if range_ is None:
            lo, hi = float(angles.min()), float(angles.max())
            pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo), 1e-6) * 0.05 + 1e-9
            range_ = (lo - pad, hi + pad)
        edges = np.linspace(range_[0], range_[1], bins + 1)
        # clamp so no molecule falls off the detector
        idx = np.clip(np.searchsorted(edges, angles, side="right") - 1, 0, bins - 1)
        total = np.bincount(idx, minlength=bins)
        order = sorted(set(tags), key=lambda t: (isinstance(t, str), t))
        ids = {t: n for n, t in enumerate(order)}
        tag_id = np.array([ids[t] for t in tags], dtype=int)
        counts = np.zeros((len(order), bins), dtype=int)
        np.add.at(counts, (tag_id, idx), 1)
        return cls(edges, total, {t: counts[n] for t, n in ids.items()})

    @property
    def n(self) -> int:
        return int(self.total.sum())


@dataclass(frozen=True, eq=False)
class BeamResult:
    histogram: DetectorHistogram
    trajectories: list[TrajectoryResult]
    affected: np.ndarray  # bool per molecule: had a dominant line
    resonant: np.ndarray  # bool per molecule: dominant line fails the nonresonance test

    @property
    def angles(self) -> np.ndarray:
        return np.array([t.angle for t in self.trajectories])


@dataclass(frozen=True)
class _Context:
    cumulative: np.ndarray
    state_keys: np.ndarray  # (n_levels, 3)
    params: dict  # level index -> _LineParams
    laser_k: float
    waist: float
    mass: float
    v_rec: float
    beam: BeamParameters


def _molecule_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,))))


def _run_chunk(ctx: _Context, start: int, stop: int) -> list[tuple[int, TrajectoryResult]]:
    b = ctx.beam
    out = []
    for i in range(start, stop):
        rng = _molecule_rng(b.rng_seed, i)
        # fixed draw order; every draw happens whether or not its mechanism is enabled
        u_state = rng.random()
        n_v = rng.standard_normal()
        n_z = rng.standard_normal()
        n_d = rng.standard_normal()
        sign = 1.0 if rng.random() < 0.5 else -1.0
        level = int(np.searchsorted(ctx.cumulative, u_state * ctx.cumulative[-1], side="right"))
        level = min(level, len(ctx.cumulative) - 1)
        v_x = b.v0 * (1.0 + b.sigma_v_rel * n_v)
        if not v_x > 0:
            v_x = b.v0 * 1e-3
        z = b.z_center + b.delta_z * n_z
        v_z0 = diffraction_width(b.delta_z, ctx.mass) * n_d if b.diffraction else 0.0
        p = ctx.params.get(level, _LineParams(0.0, 0.0, 0.0))
        uniforms = rng.random(b.n_steps) if (b.emission and p.g > 0) else None
        kz = ctx.laser_k * z
        r = _propagate(p, math.sin(2 * kz), math.cos(kz) ** 2, v_x, v_z0, ctx.laser_k, ctx.waist,
                       ctx.mass, ctx.v_rec, b.n_steps, uniforms, sign)
        out.append((level, _with_state(r, ctx.state_keys[level], z)))
    return out


def dominant_parameters(ensemble: ThermalEnsemble, molecule: Molecule, laser: LaserField, line_window: float,
                        threshold: float = NONRESONANCE_THRESHOLD) -> tuple[dict, dict, LineTable]:
    """Per-level dominant line (as ``_LineParams``) and resonance flag for every affected level."""
    levels = _populated_levels(ensemble)
    w0 = float(laser.wavenumber)
    table = line_table(levels, molecule, laser.intensity, w0 - line_window, w0 + line_window)
    params: dict = {}
    resonant: dict = {}
    if len(table) == 0:
        return params, resonant, table
    keys = table.state_keys()
    lv = ensemble.levels
    index = {(int(a), int(b), int(c)): i for i, (a, b, c) in enumerate(zip(lv.nu, lv.J, lv.M))}
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    delta = table.frequency - w0
    for u, key in enumerate(uniq):
        rows = np.flatnonzero(inverse == u)
        j = rows[_dominant_index(table.g[rows], delta[rows], table.nu_p[rows])]
        lvl = index[(int(key[0]), int(key[1]), int(key[2]))]
        params[lvl] = _LineParams(
            wavenumber_to_angular_frequency(float(table.g[j])),
            wavenumber_to_angular_frequency(float(delta[j])),
            wavenumber_to_angular_frequency(float(table.Gamma[j])),
        )
        resonant[lvl] = not is_nonresonant(table.g[j], delta[j], threshold)
    return params, resonant, table


def simulate_beam(ensemble: ThermalEnsemble, molecule: Molecule, laser: LaserField, beam: BeamParameters,
                  line_window: float = 0.155, bins: int = 200, hist_range: tuple[float, float] | None = None,
                  workers: int = 1) -> BeamResult:
    """Sample, propagate and histogram ``beam.n_molecules`` molecules.

    Molecule ``i`` draws from its own RNG stream derived from (seed, i), and
    molecules are processed in fixed-size chunks reduced in index order, so
    the output does not depend on ``workers``.
    """
    params, resonant_map, _ = dominant_parameters(ensemble, molecule, laser, line_window)
    ctx = _Context(
        cumulative=np.cumsum(ensemble.weights),
        state_keys=np.stack([ensemble.levels.nu, ensemble.levels.J, ensemble.levels.M], axis=1),
        params=params,
        laser_k=laser.k,
        waist=laser.waist,
        mass=molecule.mass,
        v_rec=photon_recoil_velocity(laser.wavelength, molecule.mass),
        beam=beam,
    )
    bounds = [(s, min(s + CHUNK, beam.n_molecules)) for s in range(0, beam.n_molecules, CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [ctx] * len(bounds), *zip(*bounds)))
    else:
        parts = [_run_chunk(ctx, s, e) for s, e in bounds]
    flat = [item for part in parts for item in part]
    levels = [lvl for lvl, _ in flat]
    trajs = [t for _, t in flat]
    affected = np.array([lvl in params for lvl in levels])
    resonant = np.array([resonant_map.get(lvl, False) for lvl in levels])
    tags = [t.level if a else "unaffected" for t, a in zip(trajs, affected)]
    hist = DetectorHistogram.from_angles(np.array([t.angle for t in trajs]), tags, bins, hist_range)
    return BeamResult(hist, trajs, affected, resonant)
