import numpy as np
import pytest

from bitwave.wavelets import make_table


@pytest.fixture(scope="session")
def tables():
    """One table per family used across the suite, built once."""
    return {name: make_table(name, 12)
            for name in ("haar", "db2", "db3", "db4", "db5")}


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
