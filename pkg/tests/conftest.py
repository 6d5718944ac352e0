from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from jmech.symcalc import HamiltonianSystem

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def oscillator(omega: float = 1.0) -> HamiltonianSystem:
    return HamiltonianSystem.from_string("0.5*(p1^2 + w^2*q1^2)", 1, {"w": omega})


def free_particle() -> HamiltonianSystem:
    return HamiltonianSystem.from_string("0.5*p1^2", 1)


def modulated_oscillator() -> HamiltonianSystem:
    return HamiltonianSystem.from_string("0.5*(p1^2 + (1 + 0.1*sin(t))^2*q1^2)", 1)


@pytest.fixture
def ho():
    return oscillator(1.0)


@pytest.fixture
def free():
    return free_particle()


@pytest.fixture
def modulated():
    return modulated_oscillator()


@pytest.fixture
def ho_file(tmp_path):
    path = tmp_path / "ho.ham"
    path.write_text("# harmonic oscillator\ndim = 1\nparam w = 1\nH = 0.5*(p1^2 + w^2*q1^2)\n")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
