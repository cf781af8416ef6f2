from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from discrete_lorenz.maps import MapSpec, orbit
from discrete_lorenz.lyapunov import spectrum

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

HENON_A = MapSpec.henon(0.0, 0.85, 0.7)  # Lorenz-like attractor, M2 = 0.85
HENON_B = MapSpec.henon(0.0, 0.815, 0.7)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure run time only."""
    m = HENON_A
    orbit(m, (0.1, 0.1, 0.1), 10, 10)
    spectrum(m, (0.1, 0.1, 0.1), 10, 1000)
    from discrete_lorenz.pseudohyp import strong_contracting_field

    strong_contracting_field(m, orbit(m, (0.1, 0.1, 0.1), 10, 1100).points, warmup=10)
    aff = MapSpec.affine(np.diag([0.9, 0.3, -1.2]))
    orbit(aff, (0.1, 0.1, 0.1), 1, 2)
    spectrum(aff, (0.1, 0.1, 0.1), 1, 1000)
