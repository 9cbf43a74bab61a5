import os

import hypothesis
import numpy as np
import pytest

from altphillips import ApParams

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def params():
    return ApParams(1.5)


@pytest.fixture(scope="session")
def amp(params):
    return params.amplitude


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
