import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_layer(rng, p, q, r, scale=None):
    from ptreg.cpmap import KrausLayer
    scale = 1.0 / np.sqrt(p * r) if scale is None else scale
    return KrausLayer(scale * rng.standard_normal((r, q, p)))


def gram(rng, n, k=None):
    G = rng.standard_normal((n, n if k is None else k))
    return G @ G.T


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
