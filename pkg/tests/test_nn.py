import math

import numpy as np
import pytest

from jamgen.errors import DivergedError, ModelFormatError, ShapeMismatchError
from jamgen.nn import (Adam, AdamState, Conv2d, Dense, Elu, Flatten, LeakyRelu,
                       Model, PowerNorm, Relu, Reshape, Sigmoid, Softmax,
                       adam_step, bce_logits, bce_logits_and_grad,
                       check_input_gradient, check_param_gradients,
                       cross_entropy, cross_entropy_and_grad, load_into,
                       load_model, mse, mse_and_grad, save_model)

RNG = np.random.default_rng(0)
GRAD_TOL = 1e-4


def mse_loss_to_ones(out):
    return mse_and_grad(out, np.ones_like(out))


class TestForward:
    def test_identity_dense(self):
        layer = Dense(4, 4, RNG)
        layer.params["W"] = np.eye(4, dtype=np.float32)
        layer.params["b"][:] = 0
        m = Model([layer], (4,))
        x = np.random.default_rng(1).normal(size=(3, 4)).astype(np.float32)
        assert np.allclose(m.forward(x), x)

    def test_zero_dense_softmax_uniform(self):
        layer = Dense(5, 16, RNG)
        layer.params["W"][:] = 0
        layer.params["b"][:] = 0
        m = Model([layer, Softmax()], (5,))
        out = m.forward(np.random.default_rng(2).normal(size=(4, 5)).astype(np.float32))
        assert np.allclose(out, 1.0 / 16, atol=1e-7)

    def test_one_by_one_conv_identity(self):
        conv = Conv2d(1, 1, (1, 1), rng=RNG)
        conv.params["W"] = np.ones((1, 1), dtype=np.float32)
        conv.params["b"][:] = 0
        m = Model([conv], (1, 3, 5))
        x = np.random.default_rng(3).normal(size=(2, 1, 3, 5)).astype(np.float32)
        assert np.allclose(m.forward(x), x)

    def test_softmax_rows_sum_to_one(self):
        m = Model([Dense(6, 9, RNG), Softmax()], (6,))
        out = m.forward(np.random.default_rng(4).normal(size=(8, 6)).astype(np.float32))
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)

    def test_shape_mismatch_names_layer(self):
        m = Model([Dense(4, 3, RNG), Relu(), Dense(3, 2, RNG)], (4,))
        with pytest.raises(ShapeMismatchError, match="layer 0"):
            m.forward(np.zeros((2, 5), dtype=np.float32))

    def test_construction_checks_compat(self):
        with pytest.raises(ShapeMismatchError, match="layer 1"):
            Model([Dense(4, 3, RNG), Dense(4, 2, RNG)], (4,))


class TestGradients:
    def test_quadratic_identity_grad_is_input(self):
        layer = Dense(4, 4, RNG)
        layer.params["W"] = np.eye(4, dtype=np.float64)
        layer.params["b"] = np.zeros(4)
        m = Model([layer], (4,))
        x = np.random.default_rng(5).normal(size=(1, 4))
        out = m.forward(x)
        m.zero_grads()
        gx = m.backward(out)  # d(0.5||Wx||^2)/dout = out
        assert np.allclose(gx, x)

    def test_constant_loss_zero_grads(self):
        m = Model([Dense(3, 2, RNG)], (3,)).to_dtype(np.float64)
        m.forward(np.random.default_rng(6).normal(size=(2, 3)))
        m.zero_grads()
        m.backward(np.zeros((2, 2)))
        assert all(np.all(g == 0) for g in m.gradients().values())

    def test_two_layer_net_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        m = Model([Dense(5, 8, rng), Relu(), Dense(8, 3, rng)], (5,)).to_dtype(np.float64)
        x = rng.normal(size=(4, 5))
        assert check_input_gradient(m, mse_loss_to_ones, x) <= GRAD_TOL
        assert check_param_gradients(m, mse_loss_to_ones, x) <= GRAD_TOL


LAYER_CASES = {
    "dense": lambda rng: ([Dense(6, 4, rng)], (6,)),
    "conv2d": lambda rng: ([Conv2d(2, 3, (2, 3), (1, 1), (0, 2), rng), Flatten(),
                            Dense(3 * 1 * 9, 4, rng)], (2, 2, 7)),
    "conv2d_strided": lambda rng: ([Conv2d(1, 4, (2, 8), (2, 1), (0, 1), rng), Flatten(),
                                    Dense(4 * 2 * 11, 3, rng)], (1, 4, 16)),
    "relu": lambda rng: ([Dense(5, 6, rng), Relu(), Dense(6, 3, rng)], (5,)),
    "leaky_relu": lambda rng: ([Dense(5, 6, rng), LeakyRelu(), Dense(6, 3, rng)], (5,)),
    "elu": lambda rng: ([Dense(5, 6, rng), Elu(), Dense(6, 3, rng)], (5,)),
    "sigmoid": lambda rng: ([Dense(5, 6, rng), Sigmoid(), Dense(6, 3, rng)], (5,)),
    "softmax": lambda rng: ([Dense(5, 6, rng), Softmax()], (5,)),
    "power_norm": lambda rng: ([Dense(5, 14, rng), PowerNorm(7)], (5,)),
    "reshape": lambda rng: ([Reshape((1, 2, 3)), Conv2d(1, 2, (2, 2), rng=rng),
                             Flatten(), Dense(4, 2, rng)], (6,)),
}


@pytest.mark.parametrize("name", sorted(LAYER_CASES))
def test_gradcheck_every_layer(name):
    rng = np.random.default_rng(11)
    layers, in_shape = LAYER_CASES[name](rng)
    m = Model(layers, in_shape).to_dtype(np.float64)
    x = rng.normal(size=(3,) + in_shape)
    assert check_input_gradient(m, mse_loss_to_ones, x) <= GRAD_TOL
    assert check_param_gradients(m, mse_loss_to_ones, x) <= GRAD_TOL


class TestLosses:
    def test_uniform_cross_entropy(self):
        logits = np.zeros((3, 16))
        assert cross_entropy(logits, np.array([0, 5, 15])) == pytest.approx(math.log(16))

    def test_confident_cross_entropy(self):
        # independent evaluation: -log softmax([10,-10])[0] = log(1 + e^-20)
        loss = cross_entropy(np.array([[10.0, -10.0]]), np.array([0]))
        assert loss == pytest.approx(math.log1p(math.exp(-20)), rel=1e-6)
        assert loss == pytest.approx(2.061e-9, rel=1e-3)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match="label out of range"):
            cross_entropy(np.zeros((2, 4)), np.array([0, 4]))

    def test_mse_zero_when_equal(self):
        x = np.random.default_rng(8).normal(size=(3, 5))
        assert mse(x, x.copy()) == 0.0

    def test_mse_shape_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_losses_nonnegative(self):
        rng = np.random.default_rng(9)
        logits = rng.normal(size=(10, 5))
        assert cross_entropy(logits, rng.integers(0, 5, 10)) >= 0
        assert mse(rng.normal(size=(4, 4)), rng.normal(size=(4, 4))) >= 0

    def test_bce_matches_manual(self):
        z = np.array([[0.0]])
        assert bce_logits(z, np.array([[0.0]])) == pytest.approx(math.log(2))
        loss, grad = bce_logits_and_grad(np.array([[3.0]]), np.array([[1.0]]))
        assert loss == pytest.approx(math.log1p(math.exp(-3)))
        assert grad[0, 0] == pytest.approx(1 / (1 + math.exp(-3)) - 1)

    def test_ce_grad_matches_fd(self):
        rng = np.random.default_rng(10)
        logits = rng.normal(size=(4, 6))
        labels = rng.integers(0, 6, 4)
        _, grad = cross_entropy_and_grad(logits, labels)
        eps = 1e-5
        for i in (0, 3):
            for j in (0, 5):
                bumped = logits.copy()
                bumped[i, j] += eps
                up = cross_entropy(bumped, labels)
                bumped[i, j] -= 2 * eps
                down = cross_entropy(bumped, labels)
                assert grad[i, j] == pytest.approx((up - down) / (2 * eps), abs=1e-6)


class TestAdam:
    def test_zero_gradient_no_change(self):
        p = {"w": np.ones(3, dtype=np.float32)}
        adam_step(p, {"w": np.zeros(3, dtype=np.float32)}, AdamState(lr=0.1))
        assert np.allclose(p["w"], 1.0)

    def test_first_step_is_lr(self):
        # bias-corrected first step with g=1: update = -lr * 1/(1+eps) ~ -lr
        p = {"w": np.zeros(1)}
        adam_step(p, {"w": np.ones(1)}, AdamState(lr=0.1))
        assert p["w"][0] == pytest.approx(-0.1, rel=1e-6)

    def test_constant_gradient_step_magnitude_approaches_lr(self):
        p = {"w": np.zeros(1)}
        st = AdamState(lr=0.05)
        prev = 0.0
        for _ in range(500):
            adam_step(p, {"w": np.ones(1)}, st)
            step, prev = p["w"][0] - prev, p["w"][0]
        assert abs(step) == pytest.approx(0.05, rel=1e-3)

    def test_nan_gradient_diverges(self):
        with pytest.raises(DivergedError, match="diverged"):
            adam_step({"w": np.zeros(1)}, {"w": np.array([np.nan])}, AdamState())

    def test_defaults(self):
        st = AdamState()
        assert (st.beta1, st.beta2, st.eps) == (0.9, 0.999, 1e-8)

    def test_trains_linearly_separable_toy(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(60, 2)).astype(np.float32)
        labels = (x[:, 0] + x[:, 1] > 0).astype(np.int64)
        m = Model([Dense(2, 8, rng), Relu(), Dense(8, 2, rng)], (2,))
        opt = Adam(m, 0.01)
        for epoch in range(500):
            logits = m.forward(x)
            _, dlogits = cross_entropy_and_grad(logits, labels)
            m.backward(dlogits.astype(np.float32))
            opt.step()
            if np.all(np.argmax(m.forward(x), axis=1) == labels):
                break
        assert np.all(np.argmax(m.forward(x), axis=1) == labels)


class TestPersistence:
    def _model(self):
        rng = np.random.default_rng(13)
        return Model([Dense(6, 10, rng), Relu(), Dense(10, 4, rng), Softmax()], (6,))

    def test_roundtrip_bit_exact(self, tmp_path):
        m = self._model()
        path = tmp_path / "m.awnn"
        save_model(m, path, tag="victim", extra={"note": 1})
        loaded, header = load_model(path, expect_tag="victim")
        x = np.random.default_rng(14).normal(size=(5, 6)).astype(np.float32)
        assert np.array_equal(m.forward(x), loaded.forward(x))
        assert header["extra"] == {"note": 1}

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.awnn"
        save_model(self._model(), path)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(ModelFormatError, match="bad-magic"):
            load_model(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "m.awnn"
        save_model(self._model(), path)
        data = bytearray(path.read_bytes())
        data[4:8] = (99).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(ModelFormatError, match="version-mismatch"):
            load_model(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "m.awnn"
        save_model(self._model(), path)
        path.write_bytes(path.read_bytes()[:-40])
        with pytest.raises(ModelFormatError, match="truncated"):
            load_model(path)

    def test_wrong_graph_shape_mismatch(self, tmp_path):
        path = tmp_path / "m.awnn"
        save_model(self._model(), path)
        other = Model([Dense(6, 3, np.random.default_rng(15))], (6,))
        with pytest.raises(ModelFormatError, match="shape-mismatch"):
            load_into(other, path)
