import numpy as np
import pytest

from cvworkbench.numerics import QGrid, default_grid


@pytest.fixture(scope="session")
def cubic_grid():
    """Grid sized for cubic-phase states up to r = 1.2 (also holds the
    default Fock cutoff's support)."""
    return default_grid(1.2, n_fock=120)


@pytest.fixture(scope="session")
def bloch_grid():
    """Coarse grid for the photon-number-superposition family; validated
    against the fine grid to 3e-12 on every reference row."""
    fine = default_grid(1.5, n_fock=16)
    return QGrid(fine.half_extent, 2048)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240809)
