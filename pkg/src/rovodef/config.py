"""Run configuration: one YAML document, validated completely before any work starts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError


def _number(block: str, key: str, value: Any, *, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{block}.{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{block}.{key} must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{block}.{key} must be positive, got {value}")
    if nonneg and value < 0:
        raise ConfigError(f"{block}.{key} must be non-negative, got {value}")
    return value


def _integer(block: str, key: str, value: Any, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{block}.{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{block}.{key} must be >= {minimum}, got {value}")
    return value


def _flag(block: str, key: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{block}.{key} must be true or false, got {value!r}")
    return value


def parse_state(text: Any, where: str = "state") -> tuple[int, int, int]:
    """Accept ``"nu,J,M"`` or a three-element list."""
    if isinstance(text, str):
        parts = text.split(",")
    elif isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        raise ConfigError(f"{where} must be 'nu,J,M', got {text!r}")
    try:
        nu, J, M = (int(str(p).strip()) for p in parts)
    except ValueError:
        raise ConfigError(f"{where} must be three integers 'nu,J,M', got {text!r}") from None
    if nu < 0 or J < 0 or abs(M) > J:
        raise ConfigError(f"{where}: invalid quantum numbers nu={nu} J={J} M={M}")
    return nu, J, M


def _check_keys(block: str, raw: dict, allowed: set[str]) -> None:
    if not isinstance(raw, dict):
        raise ConfigError(f"'{block}' must be a mapping")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in '{block}': {', '.join(sorted(unknown))}")


@dataclass(frozen=True)
class MoleculeConfig:
    constants_file: Path | None = None  # None: bundled Na2 constants
    mass_amu: float | None = None

    @classmethod
    def parse(cls, raw: dict, base: Path) -> "MoleculeConfig":
        _check_keys("molecule", raw, {"constants_file", "mass_amu"})
        path = raw.get("constants_file")
        if path is not None:
            path = Path(path)
            if not path.is_absolute():
                path = base / path
            if not path.is_file():
                raise ConfigError(f"constants file not found: {path}")
        mass = raw.get("mass_amu")
        if mass is not None:
            mass = _number("molecule", "mass_amu", mass, positive=True)
        return cls(path, mass)


@dataclass(frozen=True)
class ThermalConfig:
    T_K: float = 1000.0
    max_nu: int = 10
    max_J: int = 100

    @classmethod
    def parse(cls, raw: dict) -> "ThermalConfig":
        _check_keys("thermal", raw, {"T_K", "max_nu", "max_J"})
        d = cls()
        return cls(
            _number("thermal", "T_K", raw.get("T_K", d.T_K), positive=True),
            _integer("thermal", "max_nu", raw.get("max_nu", d.max_nu), 1),
            _integer("thermal", "max_J", raw.get("max_J", d.max_J), 1),
        )


@dataclass(frozen=True)
class LaserConfig:
    power_W: float = 3e-4
    waist_m: float = 50e-6 / math.sqrt(math.pi)
    omega_cm1: float | None = None
    offset_from_E_el_cm1: float | None = 666.116

    @classmethod
    def parse(cls, raw: dict) -> "LaserConfig":
        _check_keys("laser", raw, {"omega_cm1", "offset_from_E_el_cm1", "power_W", "waist_m", "interaction_length_m"})
        if ("omega_cm1" in raw) == ("offset_from_E_el_cm1" in raw):
            raise ConfigError("laser: give exactly one of omega_cm1 or offset_from_E_el_cm1")
        if ("waist_m" in raw) == ("interaction_length_m" in raw):
            raise ConfigError("laser: give exactly one of waist_m or interaction_length_m")
        if "waist_m" in raw:
            waist = _number("laser", "waist_m", raw["waist_m"], positive=True)
        else:
            waist = _number("laser", "interaction_length_m", raw["interaction_length_m"], positive=True) / math.sqrt(math.pi)
        omega = offset = None
        if "omega_cm1" in raw:
            omega = _number("laser", "omega_cm1", raw["omega_cm1"], positive=True)
        else:
            offset = _number("laser", "offset_from_E_el_cm1", raw["offset_from_E_el_cm1"])
        power = _number("laser", "power_W", raw.get("power_W", cls.power_W), nonneg=True)
        return cls(power, waist, omega, offset)


@dataclass(frozen=True)
class LinesConfig:
    window_cm1: float = 0.5  # half-width of the listed line window
    dominant_window_cm1: float = 0.155  # candidate lines for the dominant-transition choice
    nonresonance_threshold: float = 10.0

    @classmethod
    def parse(cls, raw: dict) -> "LinesConfig":
        _check_keys("lines", raw, {"window_cm1", "dominant_window_cm1", "nonresonance_threshold"})
        d = cls()
        return cls(
            _number("lines", "window_cm1", raw.get("window_cm1", d.window_cm1), nonneg=True),
            _number("lines", "dominant_window_cm1", raw.get("dominant_window_cm1", d.dominant_window_cm1), positive=True),
            _number("lines", "nonresonance_threshold", raw.get("nonresonance_threshold", d.nonresonance_threshold), positive=True),
        )


@dataclass(frozen=True)
class ScanConfig:
    range_offset_cm1: tuple[float, float] = (665.9, 666.5)
    points: int = 2000
    v_x: float = 500.0

    @classmethod
    def parse(cls, raw: dict) -> "ScanConfig":
        _check_keys("scan", raw, {"range_offset_cm1", "points", "v_x"})
        d = cls()
        rng = raw.get("range_offset_cm1", list(d.range_offset_cm1))
        if not isinstance(rng, (list, tuple)) or len(rng) != 2:
            raise ConfigError("scan.range_offset_cm1 must be [low, high]")
        lo, hi = (_number("scan", "range_offset_cm1", x) for x in rng)
        if not hi > lo:
            raise ConfigError("scan.range_offset_cm1 must be increasing")
        return cls(
            (lo, hi),
            _integer("scan", "points", raw.get("points", d.points), 2),
            _number("scan", "v_x", raw.get("v_x", d.v_x), positive=True),
        )


ENSEMBLES = ("thermal", "participating", "state")


@dataclass(frozen=True)
class BeamConfig:
    v0: float = 500.0
    sigma_v_rel: float = 0.0
    two_kz: float = math.pi / 2
    two_k_delta_z: float = 0.0
    n_molecules: int = 10_000
    seed: int = 0
    emission: bool = True
    diffraction: bool = True
    n_steps: int = 2000
    ensemble: str = "thermal"
    state: tuple[int, int, int] = (0, 0, 0)
    bins: int = 200
    range_rad: tuple[float, float] | None = None
    workers: int = 1

    @classmethod
    def parse(cls, raw: dict) -> "BeamConfig":
        names = {f.name for f in fields(cls)}
        _check_keys("beam", raw, names)
        d = cls()
        ens = raw.get("ensemble", d.ensemble)
        if ens not in ENSEMBLES:
            raise ConfigError(f"beam.ensemble must be one of {', '.join(ENSEMBLES)}, got {ens!r}")
        rng = raw.get("range_rad")
        if rng is not None:
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise ConfigError("beam.range_rad must be [low, high] or null")
            rng = tuple(_number("beam", "range_rad", x) for x in rng)
            if not rng[1] > rng[0]:
                raise ConfigError("beam.range_rad must be increasing")
        return cls(
            v0=_number("beam", "v0", raw.get("v0", d.v0), positive=True),
            sigma_v_rel=_number("beam", "sigma_v_rel", raw.get("sigma_v_rel", d.sigma_v_rel), nonneg=True),
            two_kz=_number("beam", "two_kz", raw.get("two_kz", d.two_kz)),
            two_k_delta_z=_number("beam", "two_k_delta_z", raw.get("two_k_delta_z", d.two_k_delta_z), nonneg=True),
            n_molecules=_integer("beam", "n_molecules", raw.get("n_molecules", d.n_molecules), 1),
            seed=_integer("beam", "seed", raw.get("seed", d.seed), 0),
            emission=_flag("beam", "emission", raw.get("emission", d.emission)),
            diffraction=_flag("beam", "diffraction", raw.get("diffraction", d.diffraction)),
            n_steps=_integer("beam", "n_steps", raw.get("n_steps", d.n_steps), 2),
            ensemble=ens,
            state=parse_state(raw.get("state", list(d.state)), "beam.state"),
            bins=_integer("beam", "bins", raw.get("bins", d.bins), 1),
            range_rad=rng,
            workers=_integer("beam", "workers", raw.get("workers", d.workers), 1),
        )


@dataclass(frozen=True)
class RunConfig:
    molecule: MoleculeConfig = field(default_factory=MoleculeConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    laser: LaserConfig = field(default_factory=LaserConfig)
    lines: LinesConfig = field(default_factory=LinesConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    beam: BeamConfig = field(default_factory=BeamConfig)
    state: tuple[int, int, int] = (0, 0, 0)  # level examined by ``deflect``
    output_dir: Path = Path("out")

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path(".")) -> "RunConfig":
        if raw is None:
            raw = {}
        _check_keys("config", raw, {f.name for f in fields(cls)})
        out = raw.get("output_dir", "out")
        if not isinstance(out, str) or not out:
            raise ConfigError("output_dir must be a non-empty string")
        out = Path(out)
        return cls(
            molecule=MoleculeConfig.parse(raw.get("molecule") or {}, base),
            thermal=ThermalConfig.parse(raw.get("thermal") or {}),
            laser=LaserConfig.parse(raw.get("laser") or {"offset_from_E_el_cm1": 666.116, "waist_m": LaserConfig.waist_m}),
            lines=LinesConfig.parse(raw.get("lines") or {}),
            scan=ScanConfig.parse(raw.get("scan") or {}),
            beam=BeamConfig.parse(raw.get("beam") or {}),
            state=parse_state(raw.get("state", [0, 0, 0]), "state"),
            output_dir=out,
        )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(raw, base=path.parent)
