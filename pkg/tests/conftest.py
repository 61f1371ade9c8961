import math

import pytest

from stirapsim.config import resolve
from stirapsim.dynamics import RamanParams, SimModel
from stirapsim.pulses import stirap_pair

MHZ = 2 * math.pi * 1e6
US = 1e-6


def quick_pair(delta_tau=3 * US, sigma=1.5 * US, floors=(0.02, 0.05)):
    # shutter closes 10 us after the switch-off, so the quiet tail is short
    return stirap_pair(delta_tau, sigma, 90 * MHZ, 225 * MHZ, *floors, shutter_delay=30 * US)


@pytest.fixture
def quick_model():
    return SimModel(quick_pair(), RamanParams(delta_two=-1 * MHZ))


@pytest.fixture(scope="session")
def fig3_config():
    return resolve(preset="fig3")


VERDICTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, text = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
