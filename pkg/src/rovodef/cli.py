"""Command-line front end.

    rovodef <levels|lines|scan|deflect|beam> --config run.yaml [--out DIR]
            [--state nu,J,M] [--seed N] [--dump-trajectories] [--workers N]

Exit codes: 0 success, 2 configuration error, 3 physics precondition violated.
Every output file is written to a temporary name and moved into place only
after the whole command has succeeded.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .beam import BeamParameters, dominant_parameters, integrate_trajectory, simulate_beam, spontaneous_emission_probability
from .config import RunConfig, load_config, parse_state
from .errors import ConfigError, PhysicsPreconditionError
from .interaction import (
    LaserField,
    build_line_list,
    deflection_angle,
    is_nonresonant,
    scan_frequencies,
    select_dominant_transition,
)
from .molecule import Molecule, RovibronicLevel, ThermalEnsemble, enumerate_levels, load_molecule, thermal_weights
from .units import photon_recoil_velocity

CSV_VERSION = "# rovodef-csv v1"
COMMANDS = ("levels", "lines", "scan", "deflect", "beam")


@dataclass(frozen=True)
class Setup:
    config: RunConfig
    molecule: Molecule
    ensemble: ThermalEnsemble
    laser: LaserField


def prepare(cfg: RunConfig) -> Setup:
    """Load constants, build the thermal ensemble and the laser; any failure is a config error."""
    molecule = load_molecule(cfg.molecule.constants_file, cfg.molecule.mass_amu)
    if cfg.thermal.max_nu > molecule.lower.nu_max + 1:
        raise ConfigError(f"thermal.max_nu = {cfg.thermal.max_nu} exceeds the {molecule.lower.nu_max + 1} bound levels "
                          f"of {molecule.lower.label}")
    try:
        levels = enumerate_levels(molecule.lower, cfg.thermal.max_nu, cfg.thermal.max_J)
        ensemble = thermal_weights(levels, cfg.thermal.T_K, cfg.thermal.max_nu, cfg.thermal.max_J)
        lc = cfg.laser
        w0 = lc.omega_cm1 if lc.omega_cm1 is not None else float(molecule.electronic_offset) + lc.offset_from_E_el_cm1
        laser = LaserField.from_wavenumber(w0, lc.power_W, lc.waist_m)
        for state in (cfg.state, cfg.beam.state):
            levels.index_of(*state)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return Setup(cfg, molecule, ensemble, laser)


def csv_text(columns: list[str], data: np.ndarray | list, fmt: list[str]) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    buf.write(",".join(columns) + "\n")
    if len(data):
        np.savetxt(buf, np.asarray(data, dtype=float), fmt=fmt, delimiter=",")
    return buf.getvalue()


def _json_text(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=True) + "\n"


def write_outputs(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write every file to a temporary name first, then move all into place."""
    out_dir.mkdir(parents=True, exist_ok=True)
    umask = os.umask(0)
    os.umask(umask)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o666 & ~umask)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


# ----------------------------------------------------------------- commands

def cmd_levels(s: Setup) -> tuple[dict[str, str], dict]:
    lv = s.ensemble.levels
    data = np.column_stack([lv.nu, lv.J, lv.M, lv.energy, s.ensemble.weights])
    text = csv_text(["nu", "J", "M", "energy_cm1", "weight"], data, ["%d", "%d", "%d", "%.10f", "%.12e"])
    summary = {"levels": len(lv), "temperature_K": s.ensemble.temperature,
               "ground_state_weight": s.ensemble.weights[lv.index_of(0, 0, 0)]}
    return {"levels.csv": text}, summary


LINE_COLUMNS = ["lower_nu", "lower_J", "M", "upper_nu", "upper_J", "frequency_cm1", "offset_cm1",
                "delta_cm1", "Gamma_cm1", "R", "L", "S", "g_cm1"]


def min_adjacent_spacing(frequencies) -> float | None:
    """Smallest gap between distinct line positions (M-degenerate copies count once)."""
    f = np.unique(np.round(np.asarray(frequencies, dtype=float), 9))
    return float(np.diff(f).min()) if f.size > 1 else None


def cmd_lines(s: Setup) -> tuple[dict[str, str], dict]:
    lines = build_line_list(s.ensemble, s.molecule, s.laser, s.config.lines.window_cm1)
    e0 = float(s.molecule.electronic_offset)
    data = [[l.lower.nu, l.lower.J, l.lower.M, l.upper.nu, l.upper.J, l.frequency, l.frequency - e0,
             l.delta, l.Gamma, l.fc, l.L, l.S, l.g] for l in lines]
    fmt = ["%d"] * 5 + ["%.6f", "%.6f", "%.6e", "%.6e", "%.8f", "%.10f", "%d", "%.6e"]
    freqs = [float(l.frequency) for l in lines]
    summary = {
        "laser_cm1": float(s.laser.wavenumber),
        "window_cm1": s.config.lines.window_cm1,
        "n_lines": len(lines),
        "n_distinct_positions": int(np.unique(np.round(freqs, 9)).size),
        "min_adjacent_spacing_cm1": min_adjacent_spacing(freqs),
    }
    return {"lines.csv": csv_text(LINE_COLUMNS, data, fmt)}, summary


def cmd_scan(s: Setup) -> tuple[dict[str, str], dict]:
    e0 = float(s.molecule.electronic_offset)
    lo, hi = s.config.scan.range_offset_cm1
    res = scan_frequencies(s.ensemble, s.molecule, s.laser, (e0 + lo, e0 + hi), s.config.scan.points,
                           s.config.lines.dominant_window_cm1, s.config.scan.v_x,
                           s.config.lines.nonresonance_threshold)
    data = np.column_stack([getattr(res, c) for c in res.COLUMNS]) if len(res) else []
    fmt = ["%.6f", "%d", "%d", "%d", "%.10e", "%d", "%.6e", "%.6e", "%d", "%d"]
    summary = {"rows": len(res), "states": len(res.states()), "points": s.config.scan.points,
               "masked_rows": int(np.sum(res.masked)) if len(res) else 0}
    return {"scan.csv": csv_text(list(res.COLUMNS), data, fmt)}, summary


def deflect_report(s: Setup, state: tuple[int, int, int]) -> dict:
    cfg = s.config
    v_x = cfg.beam.v0
    level = RovibronicLevel("lower", *state)
    lines = build_line_list(s.ensemble.pure(*state), s.molecule, s.laser, cfg.lines.dominant_window_cm1)
    line = select_dominant_transition(level, lines)
    v_rec = photon_recoil_velocity(s.laser.wavelength, s.molecule.mass)
    l = s.laser.interaction_length
    report = {
        "state": {"nu": state[0], "J": state[1], "M": state[2]},
        "laser_cm1": float(s.laser.wavenumber),
        "wavelength_m": s.laser.wavelength,
        "interaction_length_m": l,
        "transit_time_s": l / v_x,
        "v_x_m_s": v_x,
        "recoil_reference_rad": v_rec / v_x,
        "raman_nath_bound_rad": s.laser.wavelength / l,
    }
    if line is None:
        report.update(affected=False, alpha_rad=0.0)
        return report
    report.update(
        affected=True,
        upper={"nu": line.upper.nu, "J": line.upper.J, "M": line.upper.M},
        line_cm1=float(line.frequency),
        g_cm1=float(line.g),
        delta_cm1=float(line.delta),
        Gamma_cm1=float(line.Gamma),
        R=float(line.fc),
        L=float(line.L),
        S=int(line.S),
        delta_over_g=abs(float(line.delta)) / float(line.g) if line.g > 0 else math.inf,
        nonresonant=bool(is_nonresonant(line.g, line.delta, cfg.lines.nonresonance_threshold)),
    )
    d = deflection_angle(line, s.laser, v_x, s.molecule.mass, cfg.lines.nonresonance_threshold)
    z = math.pi / 4 / s.laser.k  # steepest point, sin(2kz) = 1
    traj = integrate_trajectory(line, s.laser, s.molecule.mass, v_x, z, n_steps=cfg.beam.n_steps)
    report.update(
        alpha_rad=d.alpha,
        alpha_trajectory_rad=traj.angle,
        raman_nath_ok=d.raman_nath_ok,
        transverse_displacement_m=traj.displacement,
        P_emission=spontaneous_emission_probability(line.g, line.delta, line.Gamma, l / v_x, n_steps=cfg.beam.n_steps),
    )
    return report


def cmd_deflect(s: Setup) -> tuple[dict[str, str], dict]:
    report = deflect_report(s, s.config.state)
    return {"deflect.json": _json_text(report)}, report


def beam_ensemble(s: Setup) -> ThermalEnsemble:
    b = s.config.beam
    if b.ensemble == "state":
        return s.ensemble.pure(*b.state)
    if b.ensemble == "participating":
        params, _, _ = dominant_parameters(s.ensemble, s.molecule, s.laser, s.config.lines.dominant_window_cm1,
                                           s.config.lines.nonresonance_threshold)
        if not params:
            raise PhysicsPreconditionError("no populated state has a line near the laser frequency")
        mask = np.zeros(len(s.ensemble.levels), dtype=bool)
        mask[list(params)] = True
        return s.ensemble.restricted(mask)
    return s.ensemble


def beam_parameters(s: Setup) -> BeamParameters:
    b = s.config.beam
    return BeamParameters.from_phases(
        s.laser, two_kz=b.two_kz, two_k_delta_z=b.two_k_delta_z, v0=b.v0, sigma_v_rel=b.sigma_v_rel,
        n_molecules=b.n_molecules, rng_seed=b.seed, emission=b.emission, diffraction=b.diffraction,
        n_steps=b.n_steps,
    )


TRAJECTORY_COLUMNS = ["index", "nu", "J", "M", "affected", "v_x_m_s", "z_m", "v_z0_m_s", "v_z_m_s", "angle_rad",
                      "n_emissions", "interrupted", "recoil_m_s", "displacement_m", "step_warning"]


def cmd_beam(s: Setup, dump_trajectories: bool = False) -> tuple[dict[str, str], dict]:
    b = s.config.beam
    res = simulate_beam(beam_ensemble(s), s.molecule, s.laser, beam_parameters(s),
                        line_window=s.config.lines.dominant_window_cm1, bins=b.bins,
                        hist_range=b.range_rad, workers=b.workers)
    h = res.histogram
    tags = [t for t in h.by_state if t != "unaffected"]
    columns = ["bin_lo_rad", "bin_hi_rad", "count_total"] + [f"count_state_{nu}_{J}_{M}" for nu, J, M in tags]
    data = [h.edges[:-1], h.edges[1:], h.total] + [h.by_state[t] for t in tags]
    if "unaffected" in h.by_state:
        columns.append("count_unaffected")
        data.append(h.by_state["unaffected"])
    fmt = ["%.9e", "%.9e"] + ["%d"] * (len(columns) - 2)
    files = {"histogram.csv": csv_text(columns, np.column_stack(data), fmt)}
    trajs = res.trajectories
    if dump_trajectories:
        rows = [[i, *t.level, int(a), t.v_x, t.z, t.v_z0, t.v_z, t.angle, t.n_spontaneous_emissions,
                 int(t.interrupted), sum(t.recoil_kicks), t.displacement, int(t.step_warning)]
                for i, (t, a) in enumerate(zip(trajs, res.affected))]
        tfmt = ["%d"] * 5 + ["%.12e"] * 5 + ["%d", "%d", "%.9e", "%.9e", "%d"]
        files["trajectories.csv"] = csv_text(TRAJECTORY_COLUMNS, rows, tfmt)
    summary = {
        "n_molecules": h.n,
        "affected": int(res.affected.sum()),
        "resonant": int(res.resonant.sum()),
        "interrupted": int(sum(t.interrupted for t in trajs)),
        "step_warnings": int(sum(t.step_warning for t in trajs)),
        "states_in_histogram": len(tags),
        "angle_range_rad": [float(h.edges[0]), float(h.edges[-1])],
    }
    files["beam_summary.json"] = _json_text(summary)
    return files, summary


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rovodef", description="State-selective deflection of molecules by a standing-wave laser.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    ap.add_argument("--state", default=None, help="lower level 'nu,J,M' for deflect; restricts beam to this level")
    ap.add_argument("--seed", type=int, default=None, help="override beam.seed")
    ap.add_argument("--workers", type=int, default=None, help="override beam.workers")
    ap.add_argument("--dump-trajectories", action="store_true", help="beam: also write one row per molecule")
    return ap


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    beam = cfg.beam
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        beam = replace(beam, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        beam = replace(beam, workers=args.workers)
    state = cfg.state
    if args.state is not None:
        state = parse_state(args.state, "--state")
        beam = replace(beam, ensemble="state", state=state)
    out = Path(args.out) if args.out is not None else cfg.output_dir
    return replace(cfg, beam=beam, state=state, output_dir=out)


def run(args: argparse.Namespace) -> dict:
    cfg = apply_overrides(load_config(args.config), args)
    setup = prepare(cfg)
    if args.command == "beam":
        files, summary = cmd_beam(setup, args.dump_trajectories)
    else:
        files, summary = {"levels": cmd_levels, "lines": cmd_lines, "scan": cmd_scan, "deflect": cmd_deflect}[args.command](setup)
    written = write_outputs(cfg.output_dir, files)
    summary = dict(summary, written=[str(p) for p in written])
    return summary


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = run(args)
    except ConfigError as exc:
        print(f"rovodef: config error: {exc}", file=sys.stderr)
        return 2
    except PhysicsPreconditionError as exc:
        print(f"rovodef: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(summary, indent=2, default=float))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
