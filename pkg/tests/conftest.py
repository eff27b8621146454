import numpy as np
import pytest

from lhtwpa.line_model import LineParameters

TWO_PI = 2 * np.pi


def ghz(f):
    return TWO_PI * f * 1e9


@pytest.fixture
def left_line():
    """Left-handed line: 1670 pH, 9.6 fF, 667 fF, 10 um cells."""
    return LineParameters.from_engineering(1670, 9.6, 667, 10, "left")


@pytest.fixture
def right_line():
    """Right-handed line: 100 pH, 329 fF, 39 fF, 10 um cells."""
    return LineParameters.from_engineering(100, 329, 39, 10, "right")


@pytest.fixture
def flat_line():
    """Left-handed line with its zero-dispersion point near 9.8 GHz."""
    return LineParameters.from_engineering(1989.4, 88.4, 795.8, 10, "left")


@pytest.fixture
def numpy_backend():
    """Run the test body on the uncompiled kernels, then restore."""
    from lhtwpa import _backend

    saved = _backend.get_backend()
    _backend.set_backend("numpy")
    yield
    _backend.set_backend(saved)
