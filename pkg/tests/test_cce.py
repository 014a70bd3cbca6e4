import math

import numpy as np
import pytest

from icelearn.cce import ClassifierHead, cce_gradients, cce_loss

from helpers import central_diff, rel_err


class TestCceLoss:
    def test_identical_context_vectors_give_uniform_softmax(self):
        rng = np.random.default_rng(20)
        features = rng.normal(size=(5, 3))
        head = ClassifierHead(np.tile(rng.normal(size=(1, 3)), (4, 1)))
        expected = 5 * math.log(4)
        assert abs(cce_loss(features, [0, 1, 2, 3, 0], head) - expected) <= 1e-12

    def test_scalar_arithmetic_oracle(self):
        # One row with logits (1, 0) and label 0: -log(e / (e + 1)).
        features = np.array([[1.0]])
        head = ClassifierHead(np.array([[1.0], [0.0]]))
        expected = math.log(math.exp(1.0) + 1.0) - 1.0
        loss = cce_loss(features, [0], head)
        assert abs(loss - expected) <= 1e-12
        assert abs(loss - 0.3132616875182228) <= 1e-12

    def test_sharp_logits_drive_loss_to_zero(self):
        features = np.array([[50.0, 0.0], [0.0, 50.0]])
        head = ClassifierHead(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert 0.0 <= cce_loss(features, [0, 1], head) <= 1e-10

    def test_label_out_of_range(self):
        head = ClassifierHead(np.eye(2))
        with pytest.raises(ValueError, match="labels"):
            cce_loss(np.ones((1, 2)), [2], head)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(21)
        features = rng.normal(size=(6, 4))
        head = ClassifierHead.initialize(5, 4, seed=0)
        logits = features @ head.weights.T
        lse = np.logaddexp.reduce(logits, axis=1)
        probs = np.exp(logits - lse[:, None])
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) <= 1e-12

    def test_head_requires_two_classes(self):
        with pytest.raises(ValueError):
            ClassifierHead(np.ones((1, 3)))


class TestCceGradients:
    def test_uniform_case_weight_rows_sum_to_zero(self):
        rng = np.random.default_rng(22)
        features = rng.normal(size=(5, 3))
        head = ClassifierHead(np.tile(rng.normal(size=(1, 3)), (4, 1)))
        _, weight_grads = cce_gradients(features, [0, 1, 2, 3, 0], head)
        np.testing.assert_allclose(weight_grads.sum(axis=0), 0.0, atol=1e-12)

    def test_zero_features_with_equal_heads(self):
        features = np.zeros((3, 4))
        head = ClassifierHead(np.tile(np.ones((1, 4)), (3, 1)))
        feature_grads, _ = cce_gradients(features, [0, 1, 2], head)
        np.testing.assert_allclose(feature_grads, 0.0, atol=1e-12)

    @pytest.mark.parametrize("normalize", [False, True])
    def test_matches_finite_differences(self, normalize):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            d = int(rng.integers(2, 6))
            t = int(rng.integers(2, 5))
            features = rng.normal(size=(n, d)) + 0.1
            labels = rng.integers(0, t, size=n)
            head = ClassifierHead(rng.normal(size=(t, d)))

            feat_g, weight_g = cce_gradients(features, labels, head, normalize_features=normalize)
            analytic = np.concatenate([feat_g.ravel(), weight_g.ravel()])

            split = features.size

            def loss_of(flat):
                f = flat[:split].reshape(features.shape)
                w = flat[split:].reshape(head.weights.shape)
                return cce_loss(f, labels, ClassifierHead(w), normalize_features=normalize)

            numeric = central_diff(loss_of, np.concatenate([features.ravel(), head.weights.ravel()]))
            assert rel_err(analytic, numeric) <= 1e-4


class TestScalabilityContrast:
    def test_head_storage_grows_linearly_with_class_count(self):
        small = ClassifierHead.initialize(10, 8, seed=0)
        large = ClassifierHead.initialize(1000, 8, seed=0)
        assert large.weights.nbytes == 100 * small.weights.nbytes
