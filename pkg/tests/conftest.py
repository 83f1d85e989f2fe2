import numpy as np
import pytest

import covertmac as cm


@pytest.fixture(scope="session")
def paper():
    return cm.paper_channel()


def make_dmc(gamma_y, gamma_z):
    gy = np.asarray(gamma_y, dtype=float)
    gz = np.asarray(gamma_z, dtype=float)
    x3 = gy.shape[0] // 4
    return cm.channel.from_dict({
        "x3_size": x3, "y_size": gy.shape[1], "z_size": gz.shape[1],
        "gamma_y": gy.tolist(), "gamma_z": gz.tolist()})


@pytest.fixture(scope="session")
def uniform_channel():
    """All rows identical: zero divergences, zero capacity."""
    row = [0.25, 0.25, 0.3, 0.2]
    return make_dmc([row] * 8, [row] * 8)
