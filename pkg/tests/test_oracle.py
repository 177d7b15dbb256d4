import numpy as np
import pytest

from pdsplit.convex_problems import fw_objective, four_anchor_instance, far_anchor_instance
from pdsplit.oracle import GridSpec, grid_min, grid_points, grid_prox_oracle, subgradient_reference


def test_grid_points_row_major():
    pts = grid_points(GridSpec([0, 0], [1, 2], 3))
    assert pts.shape == (9, 2)
    np.testing.assert_array_equal(pts[:3], [[0, 0], [0, 1], [0, 2]])


def test_grid_rejects_bad_specs():
    with pytest.raises(ValueError):
        GridSpec([0, 0, 0], [1, 1, 1], 3)
    with pytest.raises(ValueError):
        GridSpec([0], [0], 3)
    with pytest.raises(ValueError):
        GridSpec([0, 0], [1, 1], 4000)


def test_prox_oracle_zero_function_is_nearest_point():
    grid = GridSpec([-1, -1], [1, 1], 21)
    out = grid_prox_oracle(lambda p: np.zeros(len(p)), 1.0, [0.33, -0.51], grid)
    np.testing.assert_allclose(out, [0.3, -0.5], atol=1e-12)


def test_prox_oracle_abs():
    grid = GridSpec([-5], [5], 2001)
    out = grid_prox_oracle(lambda p: np.abs(p[:, 0]), 1.0, [2.0], grid)
    assert abs(out[0] - 1.0) <= grid.step[0]


def test_prox_oracle_projection():
    grid = GridSpec([-5], [5], 2001)
    ind = lambda p: np.where((p[:, 0] >= 0) & (p[:, 0] <= 1), 0.0, np.inf)
    assert abs(grid_prox_oracle(ind, 1.0, [2.0], grid)[0] - 1.0) <= grid.step[0]


def test_prox_oracle_tie_break_first_index():
    grid = GridSpec([-1], [1], 3)
    out = grid_prox_oracle(lambda p: np.zeros(len(p)), 1.0, [0.5], grid)
    assert out[0] == 0.0


def _fw_vec(inst):
    return lambda p: (inst.weights * np.linalg.norm(p[:, None, :] - inst.anchors, axis=2)).sum(axis=1)


def test_grid_min_fw_four_anchors():
    grid = GridSpec([-60, -60], [60, 60], 201)
    x, v = grid_min(_fw_vec(four_anchor_instance()), grid)
    assert np.max(np.abs(x)) <= grid.step.max()
    assert fw_objective(four_anchor_instance(), [0, 0]) <= v + 1e-9


def test_grid_min_fw_far_anchor():
    grid = GridSpec([-5, -5], [105, 105], 221)
    x, v = grid_min(_fw_vec(far_anchor_instance()), grid)
    assert np.max(np.abs(x - 100)) <= grid.step.max()
    assert fw_objective(far_anchor_instance(), [100, 100]) <= v + 1e-9


def test_grid_min_quadratic():
    grid = GridSpec([-3, -3], [3, 3], 61)
    x, _ = grid_min(lambda p: ((p - [1, 2]) ** 2).sum(axis=1), grid)
    assert np.max(np.abs(x - [1, 2])) <= grid.step.max()


def test_subgradient_quadratic():
    x = subgradient_reference(lambda x: 0.5 * x @ x, lambda x: x, [4.0], 10_000)
    assert abs(x[0]) <= 0.05


def test_subgradient_abs():
    x = subgradient_reference(lambda x: abs(x[0]), lambda x: np.sign(x), [3.0], 10_000)
    assert abs(x[0]) <= 0.05


def _fw_subgradient(inst):
    def sub(x):
        d = x - inst.anchors
        n = np.linalg.norm(d, axis=1)
        mask = n > 0
        return (inst.weights[mask, None] * d[mask] / n[mask, None]).sum(axis=0)
    return sub


def test_subgradient_fw_agrees_with_grid():
    inst = four_anchor_instance()
    x = subgradient_reference(lambda x: fw_objective(inst, x), _fw_subgradient(inst),
                              [44.0, 0.0], 100_000)
    assert np.linalg.norm(x) <= 0.1
    grid = GridSpec([-60, -60], [60, 60], 201)
    g, _ = grid_min(_fw_vec(inst), grid)
    assert np.max(np.abs(x - g)) <= 2 * grid.step.max()
