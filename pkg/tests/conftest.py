import numpy as np
import pytest

from adaptprune import TokenGrid


def max_rel_diff(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b) / denom))


def hand_grid_identical_keys() -> TokenGrid:
    # 1x3 strip, strictly decreasing scores, all keys equal
    return TokenGrid(
        scores=[1.0, 0.9, 0.8],
        positions=[[0, 0], [0, 1], [0, 2]],
        keys=[[1.0], [1.0], [1.0]],
        subimage_ids=[0, 0, 0],
        grid_dims=[(1, 3)],
    )


def hand_grid_orthogonal_keys() -> TokenGrid:
    # same strip; token 1's key orthogonal to 0's, token 2's equal to 0's
    return TokenGrid(
        scores=[1.0, 0.9, 0.8],
        positions=[[0, 0], [0, 1], [0, 2]],
        keys=[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
        subimage_ids=[0, 0, 0],
        grid_dims=[(1, 3)],
    )


@pytest.fixture
def hand_identical():
    return hand_grid_identical_keys()


@pytest.fixture
def hand_orthogonal():
    return hand_grid_orthogonal_keys()
