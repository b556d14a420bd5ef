import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ffmor.model import StateSpaceModel, example_model

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_stable(rng, n, m=1, p=1, discrete=False, complex_=False, margin=(0.1, 2.0)):
    """Random stable model: shift (continuous) or rescale (discrete) a Gaussian matrix."""
    def draw(*shape):
        x = rng.standard_normal(shape)
        return x + 1j * rng.standard_normal(shape) if complex_ else x

    A = draw(n, n)
    lam = np.linalg.eigvals(A)
    if discrete:
        A = A * rng.uniform(0.2, 0.95) / np.max(np.abs(lam))
    else:
        A = A - (np.max(lam.real) + rng.uniform(*margin)) * np.eye(n)
    return StateSpaceModel(A, draw(n, m), draw(p, n), draw(p, m),
                           "discrete" if discrete else "continuous")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ex1():
    return example_model("example1")


@pytest.fixture(scope="session")
def ex2():
    return example_model("example2")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
