import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sccqed.bosonic import FockTruncation
from sccqed.model import ModelParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# strong-coupling defaults of the acceptance runs (omega_2 is a placeholder)
DEFAULT = ModelParams(omega=1.0, g1=0.2, g2=0.05, delta=0.005, drive_freqs=(0.7, 0.013))
TRUNC = FockTruncation(48, 12)

# a regime in which the rotating-wave reduction is valid (R << omega_2)
FEASIBLE = ModelParams(omega=1.0, g1=0.1, g2=2.4e-4, delta=0.01, drive_freqs=(0.37, 0.002))
FEASIBLE_TRUNC = FockTruncation(16, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def random_params(rng, g2=None):
    """Strong-coupling draw with x <= 0.5 and zero drive phases."""
    g1 = rng.uniform(0.05, 0.25)
    return ModelParams(1.0, g1, rng.uniform(0.0, 0.1) if g2 is None else g2,
                       rng.uniform(-1, 1) * g1 / 20, tuple(rng.uniform(0.2, 1.5, 2)))


def random_resonance(rng, n=0, gamma_max=50.0):
    """(params, solution) for a random strong-coupling draw with at least one root."""
    from sccqed.bosonic import displaced_diag_element
    from sccqed.rwa import find_resonances
    while True:
        g1 = rng.uniform(0.05, 0.25)
        delta = rng.choice([-1, 1]) * rng.uniform(g1 / 40, g1 / 10)
        eps = 0.5 * abs(delta) * displaced_diag_element(n, 2 * g1)
        p = ModelParams(1.0, g1, eps * rng.uniform(0.05, 3.0), delta,
                        (rng.uniform(0.2, 1.5), 1.0))
        alpha = int(rng.choice([-3, -1, 1, 3]))
        roots = find_resonances(n, p, alpha, gamma_max=gamma_max)
        if roots:
            sol = roots[rng.integers(len(roots))]
            return sol.apply(p), sol


# one line per acceptance criterion, echoed again at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
