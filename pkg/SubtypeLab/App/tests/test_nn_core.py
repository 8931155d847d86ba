"""
Network core: kernels, forward/backward, losses, optimizer, parameter files.
"""
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from App.exceptions import DataIOError, NumericError, ShapeError, ValidationError
from App.nn.engine import (
    backward, conv2d_forward, dropout_mask, forward, gradient_check, maxpool_forward, relative_error,
    softmax,
)
from App.nn.initializers import init_params
from App.nn.layers import LayerSpec, NetworkSpec, build_network_spec, load_spec, save_spec
from App.nn.losses import PROB_CLAMP, bce_loss, cross_entropy, cross_entropy_batch, l2_penalty
from App.nn.optim import AdamState, adam_step
from App.nn.tensors import load_params, params_equal, save_params


def naive_conv(x, W, b, stride):
    n, h, w, _ = x.shape
    k, _, _, f = W.shape
    ho, wo = (h - k) // stride + 1, (w - k) // stride + 1
    out = np.zeros((n, ho, wo, f))
    for s in range(n):
        for i in range(ho):
            for j in range(wo):
                patch = x[s, i * stride:i * stride + k, j * stride:j * stride + k, :]
                for o in range(f):
                    out[s, i, j, o] = np.sum(patch * W[..., o]) + b[o]
    return out


class SoftmaxTests(SimpleTestCase):

    def test_uniform_logits(self):
        dist = softmax([0.0, 0.0, 0.0])
        np.testing.assert_allclose(dist.probabilities, [1 / 3] * 3)

    def test_large_logits_are_stable(self):
        dist = softmax([1000.0, 0.0])
        self.assertAlmostEqual(dist.probabilities[0], 1.0)
        self.assertEqual(dist.argmax(), 0)

    def test_rejects_non_finite(self):
        with self.assertRaises(NumericError):
            softmax([np.nan, 0.0])

    def test_rejects_scalar(self):
        with self.assertRaises(ValidationError):
            softmax([1.0])

    def test_shift_invariant(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            z = rng.normal(0, 5, size=4)
            a = softmax(z).probabilities
            b = softmax(z + rng.normal(0, 50)).probabilities
            self.assertAlmostEqual(float(a.sum()), 1.0, delta=1e-12)
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


class LayerSpecTests(SimpleTestCase):

    def test_dropout_rate_range(self):
        with self.assertRaises(ValidationError):
            LayerSpec.dropout(1.0)
        self.assertEqual(LayerSpec.dropout(0.0).rate, 0.0)

    def test_softmax_must_be_last(self):
        with self.assertRaises(ValidationError):
            NetworkSpec((4,), (LayerSpec.softmax(), LayerSpec.dense(2)))

    def test_default_classifier_block(self):
        spec = build_network_spec((16, 16, 3))
        kinds = [layer.kind for layer in spec.layers]
        self.assertEqual(kinds[-8:], ['dense', 'relu', 'dropout', 'dense', 'relu', 'dropout', 'dense', 'softmax'])
        self.assertEqual(spec.n_classes, 2)
        self.assertEqual(len(spec.dropout_layers()), 2)

    def test_kernel_larger_than_input(self):
        with self.assertRaises(ShapeError):
            build_network_spec((2, 2, 1), backbone=[LayerSpec.conv2d(1, 3)])

    def test_spec_file_round_trip(self):
        spec = build_network_spec((16, 16, 2), backbone_dropout=0.1, widths=(4,))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'spec.json'
            save_spec(spec, path)
            self.assertEqual(load_spec(path), spec)


class KernelTests(SimpleTestCase):

    def test_conv_matches_loops(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 7, 6, 3))
        W = rng.normal(size=(3, 3, 3, 4))
        b = rng.normal(size=4)
        for stride in (1, 2):
            np.testing.assert_allclose(conv2d_forward(x, W, b, stride), naive_conv(x, W, b, stride), atol=1e-12)

    def test_maxpool_drops_remainder(self):
        x = np.arange(25, dtype=float).reshape(1, 5, 5, 1)
        out, _ = maxpool_forward(x, 2)
        self.assertEqual(out.shape, (1, 2, 2, 1))
        np.testing.assert_array_equal(out[0, :, :, 0], [[6, 8], [16, 18]])

    def test_dropout_mask_values(self):
        mask = dropout_mask((1000,), 0.25, np.random.default_rng(0))
        self.assertTrue(set(np.unique(mask)).issubset({0.0, 1 / 0.75}))
        self.assertAlmostEqual(float(np.mean(mask == 0)), 0.25, delta=0.05)

    def test_dropout_preserves_expectation(self):
        rng = np.random.default_rng(8)
        activation = np.array([0.3, 1.7, 2.5])
        for rate in (0.25, 0.5):
            masks = dropout_mask((400000, 3), rate, rng)
            np.testing.assert_allclose((masks * activation).mean(axis=0), activation, rtol=0.01)

    def test_zero_rate_mask_is_identity(self):
        mask = dropout_mask((50,), 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(mask, np.ones(50))


class ForwardTests(SimpleTestCase):

    def setUp(self):
        self.spec = build_network_spec((4,), backbone='none', widths=(5,), dropout=0.3, n_classes=3)
        self.params = init_params(self.spec, seed=1)

    def test_output_is_distribution(self):
        out, _ = forward(self.spec, self.params, np.ones(4))
        self.assertEqual(out.shape, (3,))
        self.assertAlmostEqual(float(out.sum()), 1.0, places=12)

    def test_batch_follows_input(self):
        out, trace = forward(self.spec, self.params, np.ones((6, 4)))
        self.assertEqual(out.shape, (6, 3))
        self.assertTrue(trace.batched)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            forward(self.spec, self.params, np.ones(5))

    def test_eval_ignores_dropout(self):
        x = np.linspace(-1, 1, 4)
        a, _ = forward(self.spec, self.params, x, mode='eval')
        b, _ = forward(self.spec, self.params, x, mode='eval')
        np.testing.assert_array_equal(a, b)

    def test_mc_needs_rng(self):
        with self.assertRaises(ValidationError):
            forward(self.spec, self.params, np.ones(4), mode='mc')

    def test_mc_passes_vary(self):
        rng = np.random.default_rng(0)
        x = np.linspace(-1, 1, 4)
        outs = {tuple(forward(self.spec, self.params, x, mode='mc', rng=rng)[0]) for _ in range(20)}
        self.assertGreater(len(outs), 1)

    def test_unknown_mode(self):
        with self.assertRaises(ValidationError):
            forward(self.spec, self.params, np.ones(4), mode='predict')

    def test_non_finite_input(self):
        with self.assertRaises(NumericError):
            forward(self.spec, self.params, np.array([0.0, np.inf, 0.0, 0.0]))


class GradientCheckTests(SimpleTestCase):

    def test_dense_networks(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            spec = build_network_spec((4,), backbone='none', widths=(5,), dropout=0.3, n_classes=3)
            params = init_params(spec, seed)
            x = rng.normal(size=(3, 4))
            y = rng.integers(3, size=3)
            self.assertLess(gradient_check(spec, params, x, y, rng=rng), 1e-4, msg=f"seed {seed}")

    def test_conv_networks(self):
        backbone = [LayerSpec.conv2d(3, 3), LayerSpec.relu(), LayerSpec.maxpool2d(2)]
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            spec = build_network_spec((6, 6, 2), backbone=backbone, widths=(4,), dropout=0.2)
            params = init_params(spec, seed)
            x = rng.normal(size=(2, 6, 6, 2))
            y = np.array([0, 1])
            self.assertLess(gradient_check(spec, params, x, y, rng=rng), 1e-4, msg=f"seed {seed}")

    def test_dropped_unit_gets_no_gradient(self):
        spec = build_network_spec((3,), backbone='none', widths=(4,), dropout=0.5)
        params = init_params(spec, 2)
        x = np.array([[0.2, -0.4, 1.0]])
        mask = np.array([[2.0, 0.0, 2.0, 2.0]])
        out, trace = forward(spec, params, x, mode='train', masks={2: mask})
        _, dprobs = cross_entropy_batch(out, np.array([0]))
        grads = backward(spec, params, trace, dprobs)
        np.testing.assert_array_equal(grads[0]['W'][:, 1], np.zeros(3))
        np.testing.assert_array_equal(grads[3]['W'][1], np.zeros(2))
        self.assertLess(gradient_check(spec, params, x, [0], masks={2: mask}), 1e-4)

    def test_single_sample(self):
        spec = build_network_spec((3,), backbone='none', widths=(4, 4), dropout=0.5)
        params = init_params(spec, 7)
        # non-zero biases keep hidden pre-activations off the ReLU kink even when
        # dropout silences a whole layer
        for layer in params.values():
            layer['b'] = np.linspace(-0.3, 0.35, layer['b'].size)
        self.assertLess(gradient_check(spec, params, np.array([0.5, -1.0, 2.0]), 1), 1e-4)

    def test_relative_error_floor(self):
        self.assertEqual(relative_error(0.0, 0.0), 0.0)
        self.assertAlmostEqual(relative_error(1e-7, 0.0), 1.0)
        self.assertAlmostEqual(relative_error(2e-9, 0.0), 0.2)
        self.assertAlmostEqual(relative_error(0.5, 0.25), 1 / 3)


class LossTests(SimpleTestCase):

    def test_cross_entropy_value(self):
        self.assertAlmostEqual(cross_entropy([0.25, 0.75], 1), -np.log(0.75))

    def test_clamp(self):
        self.assertAlmostEqual(cross_entropy([1.0, 0.0], 1), -np.log(PROB_CLAMP), places=6)
        self.assertAlmostEqual(cross_entropy([1.0, 0.0], 1), 27.631, places=3)

    def test_bce_needs_two_classes(self):
        with self.assertRaises(ValidationError):
            bce_loss([0.2, 0.3, 0.5], 0)

    def test_batch_gradient(self):
        probs = np.array([[0.2, 0.8], [0.6, 0.4]])
        loss, grad = cross_entropy_batch(probs, np.array([1, 0]))
        self.assertAlmostEqual(loss, -(np.log(0.8) + np.log(0.6)) / 2)
        np.testing.assert_allclose(grad, [[0, -1 / 1.6], [-1 / 1.2, 0]])

    def test_l2_selects_layers(self):
        params = {0: {'W': np.ones((2, 2)), 'b': np.ones(2)}, 2: {'W': 2 * np.ones((2, 2)), 'b': np.ones(2)}}
        penalty, grads = l2_penalty(params, 0.5, [2])
        self.assertAlmostEqual(penalty, 0.5 * 16)
        np.testing.assert_array_equal(grads[0]['W'], np.zeros((2, 2)))
        np.testing.assert_array_equal(grads[2]['W'], 2 * np.ones((2, 2)))
        np.testing.assert_array_equal(grads[2]['b'], np.zeros(2))


class AdamTests(SimpleTestCase):

    def test_zero_gradient_keeps_params(self):
        params = {0: {'W': np.array([[0.5, -2.0]]), 'b': np.array([1.0, 0.0])}}
        grads = {0: {'W': np.zeros((1, 2)), 'b': np.zeros(2)}}
        new, _ = adam_step(AdamState.initial(params), params, grads, lr=0.1)
        np.testing.assert_array_equal(new[0]['W'], params[0]['W'])
        np.testing.assert_array_equal(new[0]['b'], params[0]['b'])

    def test_two_steps_match_reference(self):
        w, g, lr = 0.7, 0.25, 0.05
        m = v = 0.0
        expected = w
        for t in (1, 2):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            expected -= lr * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        params = {0: {'W': np.array([[w]]), 'b': np.zeros(1)}}
        grads = {0: {'W': np.array([[g]]), 'b': np.zeros(1)}}
        state = AdamState.initial(params)
        for _ in range(2):
            params, state = adam_step(state, params, grads, lr)
        self.assertAlmostEqual(float(params[0]['W'][0, 0]), expected, delta=1e-12)
        self.assertEqual(state.t, 2)

    def test_first_step_moves_by_lr(self):
        params = {0: {'W': np.array([[1.0, -1.0]]), 'b': np.zeros(2)}}
        grads = {0: {'W': np.array([[0.3, -5.0]]), 'b': np.array([0.0, 2.0])}}
        new, state = adam_step(AdamState.initial(params), params, grads, lr=0.01)
        np.testing.assert_allclose(new[0]['W'], [[0.99, -0.99]], atol=1e-8)
        np.testing.assert_allclose(new[0]['b'], [0.0, -0.01], atol=1e-8)
        self.assertEqual(state.t, 1)
        np.testing.assert_array_equal(params[0]['W'], [[1.0, -1.0]])


class ParamFileTests(SimpleTestCase):

    def setUp(self):
        self.spec = build_network_spec((6, 6, 1), backbone=[LayerSpec.conv2d(2, 3)], widths=(3,))
        self.params = init_params(self.spec, 4)
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'stage.params.bin'

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        save_params(self.params, self.path)
        self.assertTrue(params_equal(load_params(self.path, self.spec), self.params))

    def test_same_seed_same_params(self):
        self.assertTrue(params_equal(init_params(self.spec, 4), self.params))
        self.assertFalse(params_equal(init_params(self.spec, 5), self.params))

    def test_truncated_file(self):
        save_params(self.params, self.path)
        self.path.write_bytes(self.path.read_bytes()[:-8])
        with self.assertRaises(DataIOError):
            load_params(self.path, self.spec)

    def test_shape_mismatch(self):
        save_params(self.params, self.path)
        other = build_network_spec((6, 6, 1), backbone=[LayerSpec.conv2d(3, 3)], widths=(3,))
        with self.assertRaises(ShapeError):
            load_params(self.path, other)

    def test_bad_magic(self):
        self.path.write_bytes(b'NOPE')
        with self.assertRaises(DataIOError):
            load_params(self.path, self.spec)
