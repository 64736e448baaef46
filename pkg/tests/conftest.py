"""
Test configuration and fixtures.
"""
import os
from fractions import Fraction

import pytest

from src.boundary_residue import build_compactification
from src.catalogue import EXAMPLES, hirzebruch_product, normal_cone_p1, threefold_normal_cone
from src.config import SolverSettings
from src.lg_mirror import build_potential

# Scale used by the residue fixtures
TEST_K = Fraction(8)


@pytest.fixture(scope="session")
def normal_cone_tc():
    """Degeneration to the normal cone of a point in P^1."""
    return normal_cone_p1()


@pytest.fixture(scope="session")
def hirzebruch_tc():
    """Hirzebruch surface as a product configuration."""
    return hirzebruch_product()


@pytest.fixture(scope="session")
def threefold_tc():
    """Degeneration to the normal cone of E in Bl_p P^2."""
    return threefold_normal_cone()


@pytest.fixture(scope="session")
def normal_cone_example():
    return EXAMPLES['normal-cone-p1']


@pytest.fixture(scope="session")
def hirzebruch_example():
    return EXAMPLES['hirzebruch-product']


@pytest.fixture(scope="session")
def normal_cone_comp(normal_cone_tc):
    """Compactification of the normal-cone potential at the test scale."""
    return build_compactification(build_potential(normal_cone_tc, TEST_K))


@pytest.fixture(scope="session")
def hirzebruch_comp(hirzebruch_tc):
    """Compactification of the Hirzebruch potential at the test scale."""
    return build_compactification(build_potential(hirzebruch_tc, TEST_K))


@pytest.fixture(scope="function")
def fast_settings():
    """Solver budget small enough for the test suite."""
    return SolverSettings(precision_bits=160, max_starts=600, newton_max_iter=80,
                          residual_tol=1e-25, seed=0)


@pytest.fixture(scope="function")
def test_env(tmp_path):
    """Set up test environment variables."""
    os.environ["TORIC_OUTPUT_DIR"] = str(tmp_path)
    os.environ["TORIC_LOG_LEVEL"] = "DEBUG"
    yield tmp_path
    os.environ.pop("TORIC_OUTPUT_DIR", None)
    os.environ.pop("TORIC_LOG_LEVEL", None)
