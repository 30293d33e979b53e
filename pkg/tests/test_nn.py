import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandcast.acceptance import finite_difference_gradient, reference_loss
from sandcast.errors import CapacityError, ConfigError, DataError
from sandcast.nn import (
    MlpModel,
    TrainConfig,
    _Objective,
    check_capacity,
    fit_candidates,
    forward,
    gradient,
    init_weights,
    loss_rmse,
    n_params,
    pick_hidden,
    select_hidden,
    train_scg,
)


def zero_model(H):
    return MlpModel(np.zeros((H, 3)), np.zeros(H), np.zeros(H), 0.0)


class TestModel:
    def test_init_deterministic(self):
        assert init_weights(4, 7) == init_weights(4, 7)
        assert init_weights(4, 7) != init_weights(4, 8)

    @pytest.mark.parametrize("H", [0, -1, 2.5])
    def test_bad_H(self, H):
        with pytest.raises(ConfigError):
            init_weights(H, 0)

    def test_flat_layout(self):
        m = init_weights(3, 1)
        w = m.flat()
        assert len(w) == n_params(3) == 16
        assert np.array_equal(w[:9], m.W1.ravel()) and w[-1] == m.b2
        assert MlpModel.from_flat(w, 3) == m


class TestForward:
    def test_zero_params(self, rng):
        assert forward(zero_model(3), rng.normal(size=3)) == 0.5

    def test_scalar_example(self):
        m = MlpModel(np.array([[1.0, 0, 0]]), np.zeros(1), np.array([1.0]), 0.0)
        expected = 1 / (1 + math.exp(-math.tanh(1.0)))
        assert forward(m, [1.0, 0, 0]) == pytest.approx(expected, abs=1e-15)
        assert round(forward(m, [1.0, 0, 0]), 4) == 0.6817

    @given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(0.01, 3))
    def test_range_and_b2_monotone(self, seed, b2, step):
        rng = np.random.default_rng(seed)
        m = init_weights(4, seed)
        x = rng.normal(size=(5, 3))
        lo = forward(MlpModel(m.W1, m.b1, m.W2, b2), x)
        hi = forward(MlpModel(m.W1, m.b1, m.W2, b2 + step), x)
        assert np.all((lo > 0) & (lo < 1))
        assert np.all(hi > lo)

    def test_batch_invariant(self, rng):
        m = init_weights(6, 3)
        x = rng.normal(size=(101, 3))
        whole = forward(m, x)
        parts = np.concatenate([forward(m, x[:37]), forward(m, x[37:])])
        assert np.array_equal(whole, parts)
        assert whole[5] == forward(m, x[5])


class TestGradient:
    def test_perfect_fit_zero(self, rng):
        m = init_weights(3, 0)
        x = rng.normal(size=(10, 3))
        g = gradient(m, x, forward(m, x))
        # training uses a BLAS forward pass, so only rounding-level residue remains
        assert np.max(np.abs(g.flat())) < 1e-15

    @pytest.mark.parametrize("seed", range(10))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        H = int(rng.integers(1, 9))
        x, y = rng.normal(size=(10, 3)), rng.uniform(0.2, 0.8, 10)
        m = init_weights(H, seed)
        a, n = gradient(m, x, y).flat(), finite_difference_gradient(x, y, m.flat(), H)
        assert np.max(np.abs(a - n) / np.maximum(np.abs(a), np.abs(n))) < 1e-6

    def test_objective_matches_reference(self, rng):
        m = init_weights(5, 0)
        x, y = rng.normal(size=(30, 3)), rng.random(30)
        assert _Objective(x, y, 5).error(m.flat()) == pytest.approx(float(reference_loss(x, y, m.flat(), 5)),
                                                                   rel=1e-13)

    def test_duplicated_batch(self, rng):
        m = init_weights(4, 2)
        x, y = rng.normal(size=(10, 3)), rng.random(10)
        g1 = gradient(m, x, y).flat()
        g2 = gradient(m, np.vstack([x, x]), np.concatenate([y, y])).flat()
        assert np.allclose(g1, g2, rtol=1e-12, atol=1e-15)

    def test_empty_batch(self):
        with pytest.raises(DataError):
            gradient(init_weights(2, 0), np.empty((0, 3)), np.empty(0))


class TestCapacity:
    @pytest.mark.parametrize("H,n,ok", [(8, 1000, True), (8, 500, False), (1, 90, True), (1, 89, False)])
    def test_rule(self, H, n, ok):
        assert check_capacity(H, n) is ok

    def test_train_refuses(self, rng):
        with pytest.raises(CapacityError):
            train_scg(init_weights(8, 0), rng.normal(size=(500, 3)), np.full(500, 0.5), TrainConfig())


class TestTrainScg:
    def data(self, n=400, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(n, 3))
        y = 0.5 + 0.25 * np.tanh(x[:, 0] - 0.5 * x[:, 1])
        return x, y

    def test_constant_target(self, rng):
        x = rng.normal(size=(200, 3))
        model, trace = train_scg(init_weights(2, 0), x, np.full(200, 0.5), TrainConfig(max_epoch=200))
        assert loss_rmse(model, x, np.full(200, 0.5)) < 1e-3
        assert trace.stop_reason in ("err_min_reached", "max_epoch", "converged")

    def test_huge_err_min(self):
        x, y = self.data()
        _, trace = train_scg(init_weights(2, 0), x, y, TrainConfig(max_epoch=50, err_min=1e9))
        assert trace.epochs_run == 1 and trace.stop_reason == "err_min_reached"

    def test_epoch_limits(self):
        with pytest.raises(ConfigError):
            TrainConfig(max_epoch=0)
        x, y = self.data()
        _, trace = train_scg(init_weights(2, 0), x, y, TrainConfig(max_epoch=1, err_min=0))
        assert trace.epochs_run == 1 and trace.stop_reason == "max_epoch"

    @settings(max_examples=10, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 1000))
    def test_monotone_and_improving(self, H, seed):
        x, y = self.data(seed=seed)
        m0 = init_weights(H, seed)
        model, trace = train_scg(m0, x, y, TrainConfig(max_epoch=60, err_min=0))
        assert np.all(np.diff(trace.history) <= 1e-15)
        assert loss_rmse(model, x, y) <= loss_rmse(m0, x, y)
        assert loss_rmse(model, x, y) == pytest.approx(min(trace.history), rel=1e-9)

    def test_deterministic(self):
        x, y = self.data()
        a = train_scg(init_weights(3, 5), x, y, TrainConfig(max_epoch=40))[0]
        b = train_scg(init_weights(3, 5), x, y, TrainConfig(max_epoch=40))[0]
        assert np.array_equal(a.flat().view(np.uint64), b.flat().view(np.uint64))

    def test_zero_gradient_converged(self, rng):
        x = rng.normal(size=(200, 3))
        m = zero_model(2)
        _, trace = train_scg(m, x, np.full(200, 0.5), TrainConfig(max_epoch=10, err_min=0))
        assert trace.stop_reason == "converged" and trace.history == [0.0]


class TestSelectHidden:
    def test_single_candidate(self):
        x, y = TestTrainScg().data()
        assert select_hidden(x, y, (4,), TrainConfig(max_epoch=5)) == 4

    def test_no_feasible(self, rng):
        with pytest.raises(CapacityError):
            select_hidden(rng.normal(size=(100, 3)), np.full(100, 0.5), (64,))

    def test_parsimony(self):
        # three-unit teacher plus noise: H=4 and H=8 both reach the noise floor
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4000, 3))
        teacher = MlpModel(2.0 * np.eye(3), np.zeros(3), np.array([2.0, -2.0, 2.0]), 0.0)
        y = forward(teacher, x) + 0.02 * rng.normal(size=4000)
        fits = fit_candidates(x, y, (2, 4, 8), TrainConfig(max_epoch=500, err_min=0, seed=1))
        r = {h: fits[h][1].final_rmse for h in fits}
        assert abs(r[4] - r[8]) <= 0.01 * min(r[4], r[8])
        assert r[2] > 3 * r[4]
        assert pick_hidden(fits) == 4

    def test_pick_rule(self):
        from sandcast.nn import TrainTrace

        fits = {2: (None, TrainTrace([0.3])), 4: (None, TrainTrace([0.1005])), 8: (None, TrainTrace([0.1]))}
        assert pick_hidden(fits) == 4
        fits[4] = (None, TrainTrace([0.102]))
        assert pick_hidden(fits) == 8
