import copy
import json

import numpy as np
import pytest


def straight_pair_config():
    """Two parallel straight cables, two lines, strict resistive ports.

    Sized so everything (grid resolution, collar, containment) is valid
    while staying small enough for test runtimes.
    """
    eye2 = np.eye(2).tolist()
    zero2 = np.zeros((2, 2)).tolist()
    k = 2
    W_B = np.hstack([np.eye(2 * k), np.eye(2 * k)])
    return {
        "seed": 0,
        "geometry": {
            "box": [[0.0, 1.6], [0.0, 1.0], [0.0, 1.8]],
            "collar_halfwidth": 0.3,
            "cables": [
                {"type": "segment", "p0": [0.45, 0.5, 0.4], "direction": [0, 0, 1],
                 "length": 1.0, "radius": 0.2, "line": 0},
                {"type": "segment", "p0": [1.15, 0.5, 0.4], "direction": [0, 0, 1],
                 "length": 1.0, "radius": 0.2, "line": 1},
            ],
        },
        "line": {"k": k, "n_cells": 12, "C": 1.0, "L": 1.0, "R": 0.1, "G": 0.05},
        "fields": {"grid": [16, 10, 18], "eps": 1.0, "mu": 1.0, "sigma": 0.1,
                   "n_theta": 12},
        "boundary": {
            "W_B_inp": W_B.tolist(),
            "W_B_0": [],
            "W_C_out": "colocated",
        },
        "sim": {
            "dt": 0.01, "T": 0.3,
            "input": {"kind": "sine", "freq": 1.0,
                      "amplitude": [0.3, 0.0, 0.1, 0.0]},
            "initial": {"kind": "smooth", "scale": 0.5},
        },
    }


@pytest.fixture()
def scenario_config():
    return copy.deepcopy(straight_pair_config())


@pytest.fixture()
def scenario_path(tmp_path, scenario_config):
    path = tmp_path / "straight_pair.json"
    path.write_text(json.dumps(scenario_config))
    return str(path)
