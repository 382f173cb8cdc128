import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from laxtensor import dynamics, spacetimes
from laxtensor.phasespace import PhasePoint

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

# bound inclined orbit used throughout: r ~ 6..12, theta swings about the equator
KERR_X0 = [0.0, 8.0, math.pi / 2 - 0.3, 0.0]
KERR_P0 = [-0.95, 0.0, 1.2, 2.9]
CHARGED_P0 = [-0.9875, 0.0, 1.2, 2.9]


def kerr_start(entry=None):
    entry = entry or spacetimes.kerr()
    return dynamics.mass_shell(entry.spec, KERR_X0, KERR_P0, 1)


def charged_start(entry=None):
    entry = entry or spacetimes.kerr_charged()
    off = entry.coupling * np.asarray(entry.killing_vector(np.asarray(KERR_X0)), dtype=float)
    return dynamics.mass_shell(entry.spec, KERR_X0, CHARGED_P0, 1, offset=off)


def random_phase_points(entry, n, seed):
    rng = np.random.default_rng(seed)
    return [PhasePoint(x, rng.normal(size=entry.dimension)) for x in entry.sample_points(n, seed)]


@pytest.fixture(scope="session")
def kerr_entry():
    return spacetimes.kerr()


@pytest.fixture(scope="session")
def charged_entry():
    return spacetimes.kerr_charged()


@pytest.fixture(scope="session")
def schwarzschild_entry():
    return spacetimes.schwarzschild()


@pytest.fixture(scope="session")
def kerr_short_trajectory(kerr_entry):
    cfg = dynamics.IntegratorConfig(output_step=0.05)
    return dynamics.integrate(kerr_entry.hamiltonian(), kerr_entry.spec, kerr_start(kerr_entry), 20.0, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if "test_acceptance" in rep.nodeid and rep.when == "call":
                lines += [ln for ln in rep.capstdout.splitlines() if ln.startswith("criterion")]
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(ln)
