import numpy as np
import pytest

import partgraph as pg


@pytest.fixture(scope="session")
def scene2():
    return pg.generate_scene(2, 256, 256, seed=7)


@pytest.fixture(scope="session")
def targets2(scene2):
    return pg.render_targets(scene2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
