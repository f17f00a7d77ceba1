import numpy as np
import pytest

from hybrik_kit.bodymodel import load_model, rest_pose_from_shape


@pytest.fixture(scope="session")
def model():
    return load_model()


@pytest.fixture(scope="session")
def template(model):
    return rest_pose_from_shape(model, np.zeros(model.n_betas))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, size=None):
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    v = rng.standard_normal(shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
