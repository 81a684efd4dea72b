import numpy as np
import pytest

from segstat import demo


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """A freshly generated copy of the shipped demo dataset."""
    root = tmp_path_factory.mktemp("demo")
    demo.build(root)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_mask(rng, shape, p=0.5):
    return rng.random(shape) < p
