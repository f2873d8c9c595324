import math

import numpy as np
import pytest

import banditbench as bb


def test_network_zero_at_init_and_grad_shape():
    shape = bb.NetShape(6, 8, 2)
    assert shape.param_count == 6 * 8 + 8
    theta = bb.init_params(shape, 3)
    x = bb.duplicate_half(bb.normalize_unit(np.array([0.3, -1.0, 2.0])))
    assert abs(bb.forward(shape, theta, x)) < 1e-12
    g = bb.grad(shape, theta, x)
    assert g.shape == (shape.param_count,)
    assert np.all(np.isfinite(g))


def test_odd_width_rejected():
    with pytest.raises(ValueError):
        bb.NetShape(4, 7, 2)


def test_design_matrix_one_update():
    u = bb.DesignMatrix("diagonal", 2, 1.0, 1.0)
    u.update(np.array([1.0, 0.0]))
    assert np.allclose(u.diagonal, [2.0, 1.0])
    assert u.sigma(np.array([1.0, 0.0])) == pytest.approx(math.sqrt(0.5))
    assert u.log_det == pytest.approx(math.log(2.0))


def test_ntk_and_theory():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    H = bb.ntk_matrix(x, 2)
    assert H[0, 0] == pytest.approx(1.5)
    assert H[0, 1] == pytest.approx(1.0 / math.pi)
    assert bb.effective_dimension(np.eye(2), 1.0, 2.0) == pytest.approx(2 * math.log(2) / math.log(3))
    assert bb.theory_nu(1, 1, 1, 1, 1, 2, math.exp(-1)) == pytest.approx(3.09892, abs=1e-5)
    assert bb.theory_B(np.array([1.0, 0.0]), np.eye(2)) == pytest.approx(math.sqrt(2))


def test_encoding_helpers():
    v = bb.normalize_unit(np.array([3.0, 4.0]))
    assert np.allclose(v, [0.6, 0.8])
    arms = bb.disjoint_encode(np.array([1.0, 2.0]), 3)
    assert len(arms) == 3
    assert np.allclose(arms[1], [0, 0, 1, 2, 0, 0])


def test_run_episode_is_deterministic():
    cfg = {"algo": "neural_ts", "T": 40, "width": 8, "iters": 5, "arms": 3, "dim": 4}
    a = bb.run_episode(cfg, 1)
    b = bb.run_episode(cfg, 1)
    assert len(a["regret"]) == 40
    assert a["arm"] == b["arm"]
    assert a["cumulative"] == b["cumulative"]
    assert a["total_regret"] == pytest.approx(a["cumulative"][-1])


def test_run_grid_cells():
    cfg = {"algo": "lin_ucb", "T": 30, "repeats": 2, "arms": 3, "dim": 4,
           "grid-nu": [1.0, 0.1]}
    r = bb.run_grid(cfg)
    assert r["algorithm"] == "lin_ucb"
    assert len(r["cells"]) == 2
    assert 0 <= r["best"] < 2


def test_unknown_key_raises():
    with pytest.raises(ValueError):
        bb.run_episode({"colour": "red"})
