import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from domains import ball, polydisc, unit_disc  # noqa: E402

FIXTURES = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "fixtures"))


@pytest.fixture
def disc():
    return unit_disc()


@pytest.fixture
def bidisc():
    return polydisc([1.0, 1.0])


@pytest.fixture
def ball2():
    return ball(1.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def reference_manifest_path():
    return os.path.join(FIXTURES, "reference_manifest.json")
