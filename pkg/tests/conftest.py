import numpy as np
import pytest

from ctseg.phantom import Calcification, PhantomSpec, generate


@pytest.fixture(scope="session")
def small_phantom():
    """24 slices at 128x128 with a calcification; cheap enough for many tests."""
    spec = PhantomSpec(
        slice_count=24, width=128, height=128, rng_seed=5,
        calcification=Calcification(slice_index=9, radius=3.0),
    )
    return generate(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
