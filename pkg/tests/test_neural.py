import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nndoa.array_signal import ArrayConfig
from nndoa.errors import ConfigurationError, NumericError, ShapeError
from nndoa.features import Dataset, NormStats
from nndoa.neural.activations import LEAKY_SLOPE, activation_apply, activation_grad
from nndoa.neural.io import load_model, save_model
from nndoa.neural.mlp import (BatchNorm, DenseLayer, MlpModel, TrainConfig, _forward, average_models,
                              forward, gradient_check, init_model, kfold_indices, kfold_train, loss_value,
                              train, train_arrays)
from nndoa.neural.optim import Adam, EarlyStopping, dropout_mask

CFG = ArrayConfig.half_wavelength()


def toy_dataset(n=200, d=4, k=1, seed=0, fn=None):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, d))
    y = fn(x) if fn else x[:, :k] * 60
    return Dataset(x, y, CFG, 20.0, seed)


def linear_model(w, b=0.0, activation="linear"):
    return MlpModel([DenseLayer(np.atleast_2d(w), np.atleast_1d(b), activation)],
                    NormStats.identity(np.atleast_2d(w).shape[0]), label_scale=1.0)


class TestActivations:
    def test_sigmoid_zero(self):
        assert activation_apply("sigmoid", 0.0) == 0.5

    def test_rbf_at_center(self):
        assert activation_apply("rbf", 2.5, center=2.5, width=3.0) == 1.0

    def test_rbf_unit_offset(self):
        assert activation_apply("rbf", 1.0, center=0.0, width=1.0) == pytest.approx(np.exp(-1), abs=1e-6)

    def test_piecewise(self):
        x = np.array([-2.0, 0.0, 3.0])
        np.testing.assert_array_equal(activation_apply("relu", x), [0, 0, 3])
        np.testing.assert_array_equal(activation_apply("leaky_relu", x), [-2 * LEAKY_SLOPE, 0, 3])
        np.testing.assert_array_equal(activation_apply("linear", x), x)

    def test_sigmoid_no_overflow(self):
        y = activation_apply("sigmoid", np.array([-1000.0, 1000.0]))
        np.testing.assert_array_equal(y, [0.0, 1.0])

    def test_unknown(self):
        with pytest.raises(ValueError):
            activation_apply("swish", 1.0)

    @pytest.mark.parametrize("kind", ["sigmoid", "tanh", "linear", "rbf", "relu", "leaky_relu"])
    @given(x=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3))
    def test_grad_matches_difference(self, kind, x):
        h = 1e-6
        fd = (activation_apply(kind, x + h) - activation_apply(kind, x - h)) / (2 * h)
        assert activation_grad(kind, np.array(x), activation_apply(kind, x)) == pytest.approx(fd, abs=1e-6)


class TestForward:
    def test_zero_model(self):
        m = MlpModel([DenseLayer(np.zeros((3, 4)), np.zeros(4), "relu"), DenseLayer(np.zeros((4, 2)), np.zeros(2))],
                     NormStats.identity(3), 1.0)
        np.testing.assert_array_equal(forward(m, np.ones(3)), [0, 0])

    def test_relu_passes_positive(self):
        assert forward(linear_model(1.0, 0.0, "relu"), np.array([2.0]))[0] == 2.0

    def test_relu_blocks_negative(self):
        assert forward(linear_model(1.0, 0.0, "relu"), np.array([-3.0]))[0] == 0.0

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            forward(linear_model(np.ones((2, 1))), np.ones(3))

    def test_inference_deterministic(self):
        m = init_model(5, 2, TrainConfig(), np.random.default_rng(0))
        x = np.random.default_rng(1).normal(size=(8, 5))
        assert np.array_equal(forward(m, x), forward(m, x))

    def test_label_scale(self):
        m = linear_model(1.0)
        m.label_scale = 90.0
        assert forward(m, np.array([0.5]))[0] == 45.0


class TestOptim:
    @given(st.floats(1e-3, 1e3), st.sampled_from([-1.0, 1.0]), st.floats(1e-5, 1e-1))
    def test_adam_first_step(self, mag, sign, lr):
        p = np.zeros(3)
        Adam([p], lr=lr).step([np.full(3, sign * mag)])
        assert np.all(np.abs(p) >= 0.99 * lr) and np.all(np.abs(p) <= lr)
        assert np.all(np.sign(p) == -sign)

    def test_dropout_fraction_and_scale(self):
        mask = dropout_mask(np.random.default_rng(0), (100_000,), 0.1)
        assert abs(np.mean(mask == 0) - 0.1) < 0.02
        np.testing.assert_allclose(mask[mask > 0], 1 / 0.9)

    def test_dropout_rate_zero(self):
        assert np.array_equal(dropout_mask(np.random.default_rng(0), (4, 4), 0.0), np.ones((4, 4)))

    def test_early_stopping_patience(self):
        stop = EarlyStopping(3)
        events = [stop.update(e, float(e)) for e in range(1, 10)]
        first_stop = next(i for i, (_, s) in enumerate(events, start=1) if s)
        assert first_stop == 4 and stop.best_epoch == 1

    def test_early_stopping_resets_on_improvement(self):
        stop = EarlyStopping(2)
        for e, loss in enumerate([3.0, 4.0, 2.0, 5.0], start=1):
            _, halt = stop.update(e, loss)
            assert not halt
        assert stop.update(5, 6.0)[1]


class TestBatchNorm:
    def test_constant_batch_gives_beta(self):
        layer = DenseLayer(np.array([[0.7, -1.3, 2.0]]), np.zeros(3), "linear",
                           BatchNorm(np.array([1.5, 2.0, 0.5]), np.array([0.3, -0.2, 0.9]), np.zeros(3), np.ones(3)))
        m = MlpModel([layer], NormStats.identity(1), 1.0)
        out, _ = _forward(m, np.full((16, 1), 0.37), training=True, rng=np.random.default_rng(0))
        assert np.array_equal(out, np.tile([0.3, -0.2, 0.9], (16, 1)))

    def test_running_stats_update(self):
        bn = BatchNorm.new(1)
        m = MlpModel([DenseLayer(np.ones((1, 1)), np.zeros(1), "linear", bn)], NormStats.identity(1), 1.0)
        _forward(m, np.array([[1.0], [3.0]]), training=True, rng=np.random.default_rng(0))
        assert bn.running_mean[0] == pytest.approx(0.2)
        assert bn.running_var[0] == pytest.approx(0.9 + 0.1 * 1.0)


class TestLoss:
    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_l2_strictly_increases_loss(self, seed):
        rng = np.random.default_rng(seed)
        m = init_model(3, 2, TrainConfig(hidden_sizes=(4,), batch_norm=False, dropout_rate=0), rng)
        x, y = rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
        assert loss_value(m, x, y, l2_coeff=1e-3) > loss_value(m, x, y)


class TestGradientCheck:
    def test_tanh_with_bn_dropout_l2(self):
        rng = np.random.default_rng(0)
        m = init_model(6, 2, TrainConfig(hidden_sizes=(5, 4), activation="tanh"), rng)
        assert gradient_check(m, rng.normal(size=(7, 6)), rng.normal(size=(7, 2)), l2_coeff=1e-3) < 1e-5

    @pytest.mark.parametrize("kind", ["sigmoid", "rbf"])
    def test_other_smooth(self, kind):
        rng = np.random.default_rng(3)
        m = init_model(4, 1, TrainConfig(hidden_sizes=(5,), activation=kind, dropout_rate=0), rng)
        assert gradient_check(m, rng.normal(size=(6, 4)), rng.normal(size=(6, 1))) < 1e-5

    def test_relu_away_from_kinks(self):
        cfg = TrainConfig(hidden_sizes=(6, 6), batch_norm=False, dropout_rate=0)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            m = init_model(4, 2, cfg, rng)
            x, y = rng.normal(size=(5, 4)), rng.normal(size=(5, 2))
            _, caches = _forward(m, x)
            if min(np.abs(c[1]).min() for c in caches[:-1]) > 1e-3:
                break
        else:
            pytest.fail("no kink-free draw found")
        assert gradient_check(m, x, y) < 1e-5

    def test_zero_model_zero_gradients(self):
        m = MlpModel([DenseLayer(np.zeros((3, 2)), np.zeros(2))], NormStats.identity(3), 1.0)
        assert gradient_check(m, np.zeros((4, 3)), np.zeros((4, 2))) == 0.0


class TestTrain:
    def test_realizable_linear_target(self):
        data = toy_dataset(fn=lambda x: x[:, :1] * 90)
        model, hist = train(data, TrainConfig(hidden_sizes=(), batch_norm=False, dropout_rate=0, l2_coeff=0,
                                              max_epochs=200, patience=200, learning_rate=0.05))
        assert hist.train_loss[-1] < 1e-6

    def test_history_recorded(self):
        model, hist = train(toy_dataset(), TrainConfig(hidden_sizes=(8,), max_epochs=5, patience=10))
        assert len(hist.train_loss) == len(hist.val_loss) == hist.stopped_epoch == 5

    def test_early_stop_restores_best(self):
        # validation targets are the negation of the training targets, so every
        # epoch of progress on the training data makes validation worse
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, (128, 1))
        cfg = TrainConfig(hidden_sizes=(), batch_norm=False, dropout_rate=0, l2_coeff=0, patience=3,
                          max_epochs=100, learning_rate=0.002)
        # start between the validation optimum (-0.39) and the training one (+0.39)
        seed = next(s for s in range(100)
                    if abs(init_model(1, 1, cfg, np.random.default_rng(s)).layers[0].weights[0, 0]) < 0.2)
        cfg = TrainConfig(**{**cfg.__dict__, "seed": seed})
        model, hist = train_arrays(x, 60 * x, cfg, val=(x, -60 * x))
        assert np.all(np.diff(hist.val_loss) > 0)
        assert hist.stopped_epoch == 4 and hist.best_epoch == 1
        one, _ = train_arrays(x, 60 * x, TrainConfig(**{**cfg.__dict__, "max_epochs": 1}), val=(x, -60 * x))
        assert np.array_equal(model.layers[0].weights, one.layers[0].weights)

    def test_determinism(self):
        cfg = TrainConfig(hidden_sizes=(6,), dropout_rate=0, max_epochs=5)
        a, _ = train(toy_dataset(), cfg)
        b, _ = train(toy_dataset(), cfg)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_nan_aborts(self):
        data = toy_dataset()
        data.labels[3, 0] = np.nan
        with pytest.raises(NumericError):
            train(data, TrainConfig(hidden_sizes=(4,), max_epochs=2))

    def test_empty_validation(self):
        with pytest.raises(ConfigurationError):
            train(toy_dataset(n=5), TrainConfig(validation_fraction=0.01))

    @pytest.mark.parametrize("kw", [dict(dropout_rate=1.0), dict(batch_size=0), dict(patience=0),
                                    dict(activation="gelu"), dict(optimizer="sgd")])
    def test_config_validation(self, kw):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kw)

    def test_serialization_round_trip(self, tmp_path):
        model, _ = train(toy_dataset(k=1), TrainConfig(hidden_sizes=(6, 5), max_epochs=3))
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        x = np.random.default_rng(4).uniform(-1, 1, (20, 4))
        assert np.array_equal(forward(model, x), forward(back, x))
        for la, lb in zip(model.layers, back.layers):
            assert np.array_equal(la.weights, lb.weights)
            assert np.array_equal(la.batch_norm.running_var if la.batch_norm else 0,
                                  lb.batch_norm.running_var if lb.batch_norm else 0)


class TestKfold:
    @given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 1000))
    def test_indices_partition(self, n, k, seed):
        if k > n:
            with pytest.raises(ConfigurationError):
                kfold_indices(n, k, seed)
            return
        folds = kfold_indices(n, k, seed)
        assert len(folds) == k
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))

    def test_identical_folds_average_to_fold(self):
        # duplicated data makes both folds see identical train/validation sets
        base = toy_dataset(n=60)
        cfg = TrainConfig(hidden_sizes=(5,), max_epochs=4, dropout_rate=0)
        x = base.features
        m1, _ = train_arrays(x, base.labels, cfg, val=(x, base.labels), stats=base.stats)
        m2, _ = train_arrays(x, base.labels, cfg, val=(x, base.labels), stats=base.stats)
        avg = average_models([m1, m2])
        for la, lb in zip(avg.layers, m1.layers):
            np.testing.assert_allclose(la.weights, lb.weights, rtol=0, atol=1e-15)

    def test_average_is_mean(self):
        a = linear_model(np.array([[1.0, 2.0]]), np.array([0.0, 4.0]))
        b = linear_model(np.array([[3.0, 0.0]]), np.array([2.0, 0.0]))
        avg = average_models([a, b])
        np.testing.assert_array_equal(avg.layers[0].weights, [[2.0, 1.0]])
        np.testing.assert_array_equal(avg.layers[0].biases, [1.0, 2.0])

    def test_kfold_linear_task(self):
        w = np.array([[20.0], [-10.0], [5.0], [0.0]])
        noise = np.random.default_rng(2).normal(0, 3.0, (300, 1))
        data = toy_dataset(n=300, fn=lambda x: x @ w + noise)
        test = toy_dataset(n=200, seed=9, fn=lambda x: x @ w)
        cfg = TrainConfig(hidden_sizes=(), batch_norm=False, dropout_rate=0, l2_coeff=0, max_epochs=150,
                          learning_rate=0.01)
        avg, folds = kfold_train(data, cfg, k=4)
        assert len(folds) == 4

        def mse(m):
            return np.mean((forward(m, test.features) - test.labels) ** 2)

        assert mse(avg) <= 1.5 * min(mse(m) for m in folds)

    def test_k_too_large(self):
        with pytest.raises(ConfigurationError):
            kfold_train(toy_dataset(n=3), TrainConfig(), k=4)
