import numpy as np
import pytest

from kbqa.gradsuite import build_check_model, run_gradcheck_suite, suite_architectures
from kbqa.neural import (
    BidirectionalLayer,
    Conv1dLayer,
    RecurrentDirection,
    bidirectional_forward,
    conv1d_forward,
    grad_check,
    gru_cell_forward,
    lstm_cell_forward,
)


class TestBatchedAgreesWithFunctional:
    def test_gru_direction(self):
        rng = np.random.default_rng(10)
        layer = RecurrentDirection("gru", 3, 4, reverse=False, rng=rng)
        x = rng.normal(size=(1, 6, 3))
        out = layer.forward(x, np.ones((1, 6)))
        h = np.zeros(4)
        for t in range(6):
            h = gru_cell_forward(x[0, t], h, layer.params)
            assert np.allclose(out[0, t], h, atol=1e-12)

    def test_lstm_direction(self):
        rng = np.random.default_rng(11)
        layer = RecurrentDirection("lstm", 3, 4, reverse=False, rng=rng)
        x = rng.normal(size=(1, 5, 3))
        out = layer.forward(x, np.ones((1, 5)))
        h, c = np.zeros(4), np.zeros(4)
        for t in range(5):
            h, c = lstm_cell_forward(x[0, t], h, c, layer.params)
            assert np.allclose(out[0, t], h, atol=1e-12)

    def test_bidirectional(self):
        rng = np.random.default_rng(12)
        layer = BidirectionalLayer("gru", 3, 4, rng)
        x = rng.normal(size=(1, 5, 3))
        out = layer.forward(x, np.ones((1, 5)))
        want = bidirectional_forward(x[0], "gru", layer.fwd.params, layer.bwd.params)
        assert np.allclose(out[0], want, atol=1e-12)

    def test_conv(self):
        rng = np.random.default_rng(13)
        layer = Conv1dLayer(4, 2, 3, rng)
        x = rng.normal(size=(2, 5, 3))
        out = layer.forward(x)
        for b in range(2):
            want = conv1d_forward(x[b], layer.params["F"], layer.params["b"])
            assert np.allclose(out[b], want, atol=1e-12)


class TestMasking:
    def test_padded_batch_matches_unpadded_run(self):
        """States at real positions and the final representation must be
        unaffected by right padding."""
        rng = np.random.default_rng(14)
        layer = BidirectionalLayer("lstm", 3, 4, rng)
        x_real = rng.normal(size=(1, 3, 3))
        out_real = layer.forward(x_real, np.ones((1, 3)))
        final_real = BidirectionalLayer.final_state(out_real, 4)

        x_padded = np.concatenate([x_real, rng.normal(size=(1, 2, 3))], axis=1)
        mask = np.array([[1.0, 1.0, 1.0, 0.0, 0.0]])
        out_padded = layer.forward(x_padded, mask)
        final_padded = BidirectionalLayer.final_state(out_padded, 4)

        assert np.allclose(out_padded[:, :3, :], out_real, atol=1e-12)
        assert np.allclose(final_padded, final_real, atol=1e-12)

    def test_pad_gradients_flow_through(self):
        """Loss on a padded batch must produce the gradients of the
        unpadded computation."""
        rng = np.random.default_rng(15)

        def grads_for(t_len, mask_len):
            layer = BidirectionalLayer("gru", 2, 3, np.random.default_rng(77))
            x = np.zeros((1, t_len, 2))
            x[:, :3, :] = base_x
            mask = np.zeros((1, t_len))
            mask[0, :mask_len] = 1.0
            out = layer.forward(x, mask)
            layer.zero_grads()
            d_out = np.zeros_like(out)
            d_out[:, :3, :] = base_grad
            layer.backward(d_out)
            return dict(layer.grad_items())

        base_x = rng.normal(size=(1, 3, 2))
        base_grad = rng.normal(size=(1, 3, 6))
        unpadded = grads_for(3, 3)
        padded = grads_for(5, 3)
        for name in unpadded:
            assert np.allclose(unpadded[name], padded[name], atol=1e-12)


class TestGradCheck:
    def test_quadratic_model_near_exact(self):
        class Quadratic:
            """loss = sum((W x - y)^2) / n; analytic gradient exact."""

            def __init__(self):
                rng = np.random.default_rng(16)
                self.w = rng.normal(size=(3, 4))

            def trainable_params(self):
                return {"w": self.w}

            def loss(self, example):
                x, y = example
                r = self.w @ x - y
                return float((r * r).sum() / r.size)

            def loss_and_grads(self, example):
                x, y = example
                r = self.w @ x - y
                return self.loss(example), {"w": 2.0 * np.outer(r, x) / r.size}

        rng = np.random.default_rng(17)
        example = (rng.normal(size=4), rng.normal(size=3))
        report = grad_check(Quadratic(), example, h=1e-5, tolerance=1e-9)
        assert report.passed
        assert report.max_relative_error < 1e-9

    def test_corrupted_gradient_fails_naming_param(self):
        model, batch = build_check_model(suite_architectures()[1], seed=5)

        class Corrupted:
            def trainable_params(self):
                return model.trainable_params()

            def loss(self, example):
                return model.loss(example)

            def loss_and_grads(self, example):
                value, grads = model.loss_and_grads(example)
                bad = grads["dense.W"].copy()
                flat_idx = int(np.abs(bad).argmax())
                bad.flat[flat_idx] *= 2.0
                grads["dense.W"] = bad
                return value, grads

        report = grad_check(Corrupted(), batch, h=1e-5, tolerance=1e-4)
        assert not report.passed
        assert report.worst_param == "dense.W"

    @pytest.mark.parametrize("arch_index", range(4))
    def test_architecture_gradients(self, arch_index):
        desc = suite_architectures()[arch_index]
        model, batch = build_check_model(desc, seed=0)
        report = grad_check(model, batch, h=1e-5, tolerance=1e-4)
        assert report.passed, f"{desc.kind}: {report}"

    def test_full_suite_passes(self):
        for kind, report in run_gradcheck_suite(seed=0):
            assert report.passed, f"{kind}: max={report.max_relative_error:.3e}"


class TestBackwardProperties:
    def test_zero_loss_configuration_zero_grads(self):
        """Force probability ~1 on the target; all gradients vanish."""
        model, batch = build_check_model(suite_architectures()[2], seed=3)
        model.l1_activity = 0.0
        ids, mask, _ = batch
        _, _, logits = model._forward(ids, mask, training=False)
        forced = np.argmax(logits, axis=1)
        model.dense.params["b"][:] = 0.0
        model.dense.params["W"][:] = 0.0
        model.dense.params["b"][forced[0]] = 60.0
        targets = np.full(ids.shape[0], forced[0], dtype=np.int64)
        loss, grads = model.loss_and_grads((ids, mask, targets))
        assert loss < 1e-12
        for name, grad in grads.items():
            assert np.abs(grad).max() < 1e-12, name

    def test_duplicated_example_keeps_gradients(self):
        """Mean reduction: duplicating every example changes nothing."""
        model, batch = build_check_model(suite_architectures()[3], seed=9)
        ids, mask, targets = batch
        _, single = model.loss_and_grads((ids, mask, targets))
        doubled = (
            np.concatenate([ids, ids]),
            np.concatenate([mask, mask]),
            np.concatenate([targets, targets]),
        )
        _, twice = model.loss_and_grads(doubled)
        for name in single:
            assert np.allclose(single[name], twice[name], atol=1e-12), name
