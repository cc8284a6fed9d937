import numpy as np
import pytest

from egan import cartpole, experience


@pytest.fixture(scope="session")
def small_buffer():
    """60 random-policy episodes; enough transitions for distribution checks."""
    return experience.collect_random(
        cartpole.DEFAULT_PARAMS, 60, np.random.default_rng(2024)
    )


@pytest.fixture(scope="session")
def small_encoded(small_buffer):
    return experience.encode_batch(small_buffer.items, small_buffer.stats())
