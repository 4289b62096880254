import math

import numpy as np
import pytest

import numerov_oracle
from rovodef.interaction import LaserField
from rovodef.molecule import enumerate_levels, load_molecule, thermal_weights
from rovodef.vibration import MorseWell, RadialGrid

LASER_OFFSET = 666.116  # cm^-1 above the electronic offset, 0.02 red of f(0,0)->e(6,1)
POWER = 3e-4  # W
LENGTH = 50e-6  # m
V0 = 500.0  # m/s


@pytest.fixture(scope="session")
def na2():
    return load_molecule()


@pytest.fixture(scope="session")
def wells(na2):
    return MorseWell.from_constants(na2.lower), MorseWell.from_constants(na2.upper)


@pytest.fixture(scope="session")
def ensemble(na2):
    return thermal_weights(enumerate_levels(na2.lower, 10, 100), 1000.0, 10, 100)


@pytest.fixture(scope="session")
def laser(na2):
    return LaserField.from_interaction_length(float(na2.electronic_offset) + LASER_OFFSET, POWER, LENGTH)


@pytest.fixture(scope="session")
def ground_line(na2, ensemble, laser):
    from rovodef.interaction import build_line_list, select_dominant_transition
    from rovodef.molecule import RovibronicLevel

    lines = build_line_list(ensemble.pure(0, 0, 0), na2, laser, 0.155)
    return select_dominant_transition(RovibronicLevel("X", 0, 0, 0), lines)


@pytest.fixture(scope="session")
def numerov_overlaps(wells):
    """Oracle overlaps for nu < 10 (thermally populated) and nu' < 40, on the production grid."""
    f, e = wells
    r = RadialGrid.for_wells(f, e).r
    _, pf = numerov_oracle.morse_states(float(f.D_e), f.a, f.r_e, f.reduced_mass, r, 10)
    _, pe = numerov_oracle.morse_states(float(e.D_e), e.a, e.r_e, e.reduced_mass, r, 40)
    return numerov_oracle.overlaps(pf, pe, r)


@pytest.fixture
def steepest_z(laser):
    return math.pi / 4 / laser.k


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, label: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))
    print(f"criterion {criterion}{label}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{label + ' ' if label else ''}{'ok' if good else 'FAILED'} {d}" for label, good, d in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
