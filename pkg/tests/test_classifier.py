import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavemyo.classifier import (
    ClassPosterior,
    TrainConfig,
    analytic_gradient,
    forward,
    gradient_check,
    init_model,
    load_model,
    loss,
    numeric_gradient,
    predict_proba,
    save_model,
    train,
)
from wavemyo.features import feature_layout


def _zero(model):
    return model.with_params([np.zeros_like(p) for p in model.params])


def _toy(n=200, seed=0):
    """Two Gaussian blobs separated along a random direction; labels 1 and 2."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=5)
    direction /= np.linalg.norm(direction)
    y = np.repeat([1, 2], n // 2)
    X = rng.normal(scale=0.5, size=(n, 5)) + np.where(y[:, None] == 1, -2.0, 2.0) * direction
    return X, y


class TestInit:
    def test_default_dims(self):
        model = init_model(102, 10, seed=0)
        assert model.layer_dims == (102, 32, 32, 32, 32, 32, 32, 10)
        assert all(not b.any() for b in model.biases)

    def test_deterministic(self):
        a, b = init_model(20, 3, seed=5), init_model(20, 3, seed=5)
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
        c = init_model(20, 3, seed=6)
        assert not np.array_equal(a.weights[0], c.weights[0])

    def test_he_scale(self):
        w = init_model(1000, 10, seed=1).weights[0]
        assert w.std() == pytest.approx(np.sqrt(2 / 1000), rel=0.05)

    @pytest.mark.parametrize("dims", [(0, 10), (5, 1), (-1, 3)])
    def test_bad_dims(self, dims):
        with pytest.raises(ValueError):
            init_model(*dims)


class TestForward:
    def test_zero_model_uniform(self):
        post = forward(_zero(init_model(102, 10)), np.random.default_rng(0).normal(size=102))
        np.testing.assert_allclose(post.probs, np.full(10, 0.1), atol=1e-15)

    @given(arrays(np.float64, 12, elements=st.floats(-1e3, 1e3)))
    def test_posterior_valid(self, x):
        post = forward(init_model(12, 4, seed=1), x)
        assert abs(post.probs.sum() - 1.0) <= 1e-9
        assert np.all(post.probs >= 0)

    def test_logit_shift_invariance(self):
        model = init_model(8, 5, seed=2)
        x = np.random.default_rng(1).normal(size=8)
        shifted = model.with_params(model.params[:-1] + [model.params[-1] + 123.4])
        np.testing.assert_allclose(forward(model, x).probs, forward(shifted, x).probs, atol=1e-12)

    def test_zero_model_loss_is_log_c(self):
        X = np.random.default_rng(0).normal(size=(7, 8))
        assert loss(_zero(init_model(8, 5)), X, np.arange(1, 8) % 5 + 1) == pytest.approx(np.log(5), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="expected 8 features, got 7"):
            forward(init_model(8, 3), np.zeros(7))

    def test_posterior_validation(self):
        with pytest.raises(ValueError):
            ClassPosterior(np.array([0.5, 0.6]))


class TestTrain:
    def test_separable_toy(self):
        X, y = _toy()
        model, history = train(init_model(5, 2, seed=0), X, y, TrainConfig(epochs=200, learning_rate=1e-2, patience=0))
        pred = predict_proba(model, X).argmax(axis=1) + 1
        assert np.mean(pred == y) == 1.0
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_zero_learning_rate(self):
        X, y = _toy(40)
        start = init_model(5, 2, seed=3)
        model, _ = train(start, X, y, TrainConfig(epochs=5, learning_rate=0.0, patience=0))
        assert all(np.array_equal(p, q) for p, q in zip(start.params, model.params))

    def test_deterministic(self):
        X, y = _toy(60)
        cfg = TrainConfig(epochs=5, learning_rate=1e-2, seed=9)
        a, ha = train(init_model(5, 2, seed=1), X, y, cfg)
        b, hb = train(init_model(5, 2, seed=1), X, y, cfg)
        assert ha == hb
        assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))

    def test_input_order_irrelevant(self):
        X, y = _toy(60)
        perm = np.random.default_rng(0).permutation(60)
        cfg = TrainConfig(epochs=5, learning_rate=1e-2, seed=9)
        a, _ = train(init_model(5, 2, seed=1), X, y, cfg)
        b, _ = train(init_model(5, 2, seed=1), X[perm], y[perm], cfg)
        assert all(np.array_equal(p, q) for p, q in zip(a.params + [a.mean, a.std], b.params + [b.mean, b.std]))

    def test_missing_class(self):
        X, y = _toy(20)
        with pytest.raises(ValueError, match="absent"):
            train(init_model(5, 3), X, y, TrainConfig(epochs=1))

    def test_label_range(self):
        X, _ = _toy(4)
        with pytest.raises(ValueError):
            train(init_model(5, 2), X, np.array([0, 1, 2, 1]), TrainConfig(epochs=1))

    def test_divergence_reported(self):
        X, y = _toy(40)
        with pytest.raises(FloatingPointError, match="epoch"):
            with np.errstate(all="ignore"):
                train(init_model(5, 2, seed=0), X * 1e150, y, TrainConfig(epochs=3, learning_rate=1e300, patience=0))

    def test_standardization_from_training_data(self):
        X, y = _toy(40)
        X = X * 10 + 5
        model, _ = train(init_model(5, 2), X, y, TrainConfig(epochs=1, patience=0))
        np.testing.assert_allclose(model.mean, X.mean(axis=0))
        np.testing.assert_allclose(model.std, X.std(axis=0))

    def test_early_stopping_returns_best(self):
        # random labels: held-out loss stops improving once the net memorizes
        rng = np.random.default_rng(0)
        X, y = rng.normal(size=(200, 5)), rng.integers(1, 3, size=200)
        cfg = TrainConfig(epochs=400, learning_rate=0.05, patience=3)
        model, history = train(init_model(5, 2), X, y, cfg)
        assert len(history) < 400
        assert len(history) > cfg.patience


class TestGradientCheck:
    def test_fresh_models(self):
        rng = np.random.default_rng(0)
        for m in range(3):
            model = init_model(20, 4, seed=m)
            x = rng.normal(size=20)
            assert gradient_check(model, x, int(rng.integers(1, 5)), seed=m) < 1e-4

    def test_zero_model_absolute(self):
        model = _zero(init_model(10, 3))
        grads = analytic_gradient(model, np.ones(10), 2)
        idx = [(a, o) for a, g in enumerate(grads) for o in range(g.size)]
        numeric = numeric_gradient(model, np.ones(10), 2, idx)
        analytic = np.concatenate([g.reshape(-1) for g in grads])
        np.testing.assert_allclose(analytic, numeric, atol=1e-6, rtol=0)

    def test_repeatable(self):
        model = init_model(20, 4, seed=1)
        x = np.random.default_rng(1).normal(size=20)
        assert gradient_check(model, x, 2, seed=4) == gradient_check(model, x, 2, seed=4)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        layout = feature_layout(1, 1)
        model = init_model(len(layout), 3, seed=2, feature_layout=layout)
        path = save_model(model, tmp_path / "m.json")
        back = load_model(path, expected_layout=layout)
        assert back.layer_dims == model.layer_dims and back.feature_layout == layout
        for p, q in zip(model.params + [model.mean, model.std], back.params + [back.mean, back.std]):
            assert np.array_equal(p, q)
        assert save_model(back, tmp_path / "m2.json").read_bytes() == path.read_bytes()

    def test_layout_mismatch(self, tmp_path):
        layout = feature_layout(1, 1)
        path = save_model(init_model(len(layout), 3, feature_layout=layout), tmp_path / "m.json")
        with pytest.raises(ValueError, match="layout"):
            load_model(path, expected_layout=feature_layout(1, 1, include_approximation=False))

    def test_wrong_format(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            load_model(path)
