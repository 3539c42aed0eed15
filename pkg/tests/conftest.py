import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sdot_robust.measures import DiscreteMeasure, ReferenceMeasure

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ALL_KINDS = ["cube", "ball", "sphunif", "gauss"]


@pytest.fixture
def cube2():
    return ReferenceMeasure.parse("cube:2")


@pytest.fixture
def cube1():
    return ReferenceMeasure.parse("cube:1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_target(rng, n, d, low=0.0, high=1.0, equal=False):
    atoms = rng.uniform(low, high, size=(n, d))
    weights = None if equal else rng.dirichlet(np.ones(n))
    return DiscreteMeasure.from_points(atoms, weights)


# one line per acceptance criterion, printed in the terminal summary
_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
