import math

import numpy as np
import pytest
from scipy.special import logsumexp

from riskfusion.classifier import (
    FitError,
    LabeledMatrix,
    classify,
    fit,
    load_model,
    log_posterior,
    posterior,
    save_model,
)


@pytest.fixture
def model_1d():
    return fit(LabeledMatrix([[-3.0], [-1.0], [1.0], [3.0]], [0, 0, 1, 1]), ridge=0.0)


def blobs(rng, n=60, d=4, classes=3, spread=3.0):
    centres = rng.normal(0, spread, (classes, d))
    y = np.repeat(np.arange(classes), n)
    X = centres[y] + rng.normal(size=(y.size, d))
    return LabeledMatrix(X, y)


class TestFit:
    def test_1d_example(self, model_1d):
        np.testing.assert_allclose(model_1d.class_means, [[-2.0], [2.0]])
        np.testing.assert_allclose(model_1d.covariance, [[2.0]], rtol=1e-15)
        np.testing.assert_allclose(np.exp(model_1d.log_prior), [0.5, 0.5])

    def test_identical_points(self):
        data = LabeledMatrix([[0.0], [0.0], [1.0], [1.0]], [0, 0, 1, 1])
        with pytest.raises(FitError, match="larger ridge"):
            fit(data, ridge=0.0)
        assert fit(data, ridge=1e-3).covariance[0, 0] == pytest.approx(1e-3)

    def test_singleton_class(self):
        with pytest.raises(FitError):
            fit(LabeledMatrix([[0.0], [1.0], [2.0]], [0, 0, 1]))

    def test_default_ridge(self):
        rng = np.random.default_rng(83)
        data = blobs(rng)
        raw = fit(data, ridge=0.0).covariance
        m = fit(data)
        assert m.ridge == pytest.approx(1e-6 * np.trace(raw) / raw.shape[0])

    def test_large_ridge_is_nearest_mean(self):
        rng = np.random.default_rng(89)
        data = blobs(rng)
        m = fit(data, ridge=1e8)
        X = rng.normal(0, 3, (200, 4))
        d2 = ((X[:, None, :] - m.class_means[None]) ** 2).sum(axis=-1)
        np.testing.assert_array_equal(classify(m, X), np.argmin(d2, axis=1))

    def test_priors_follow_counts(self):
        data = LabeledMatrix([[0.0], [0.5], [1.0], [5.0], [6.0]], [0, 0, 0, 1, 1])
        np.testing.assert_allclose(np.exp(fit(data).log_prior), [0.6, 0.4])

    def test_bad_input(self):
        with pytest.raises(ValueError):
            LabeledMatrix(np.zeros((3, 2)), [0, 1])


class TestPosterior:
    def test_examples(self, model_1d):
        np.testing.assert_allclose(posterior(model_1d, [0.0]), [0.5, 0.5], rtol=1e-15)
        p_b = 1 / (1 + math.exp(-2))
        np.testing.assert_allclose(posterior(model_1d, [1.0]), [1 - p_b, p_b], rtol=1e-14)
        np.testing.assert_allclose(posterior(model_1d, [-1.0]), [p_b, 1 - p_b], rtol=1e-14)

    def test_classify_examples(self, model_1d):
        assert classify(model_1d, [0.0]) == 0
        assert classify(model_1d, [1.0]) == 1
        assert classify(model_1d, [-5.0]) == 0

    def test_matches_gaussian_density(self):
        rng = np.random.default_rng(97)
        m = fit(blobs(rng))
        X = rng.normal(0, 3, (50, 4))
        cov_inv = np.linalg.inv(m.covariance)
        dev = X[:, None, :] - m.class_means[None]
        quad = np.einsum("ncd,de,nce->nc", dev, cov_inv, dev)
        logits = -0.5 * quad + m.log_prior
        expected = logits - logsumexp(logits, axis=1, keepdims=True)
        np.testing.assert_allclose(log_posterior(m, X), expected, rtol=1e-9, atol=1e-9)

    def test_linear_boundary(self):
        # log-odds between two classes are affine in x
        rng = np.random.default_rng(101)
        m = fit(blobs(rng, classes=2))
        a, b = rng.normal(size=(2, 4))
        t = np.linspace(-3, 3, 9)
        X = a + t[:, None] * b
        lp = log_posterior(m, X)
        odds = lp[:, 1] - lp[:, 0]
        np.testing.assert_allclose(np.diff(odds, 2), 0.0, atol=1e-9)

    def test_shift_invariance(self):
        rng = np.random.default_rng(103)
        data = blobs(rng)
        shift = rng.normal(0, 50, 4)
        m = fit(data, ridge=1e-3)
        ms = fit(LabeledMatrix(data.X + shift, data.y), ridge=1e-3)
        X = rng.normal(0, 3, (30, 4))
        np.testing.assert_allclose(posterior(ms, X + shift), posterior(m, X), atol=1e-9)

    def test_dimension_mismatch(self, model_1d):
        with pytest.raises(ValueError):
            posterior(model_1d, [[1.0, 2.0]])


class TestSerialisation:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(107)
        m = fit(blobs(rng))
        save_model(m, tmp_path / "model.npz")
        loaded = load_model(tmp_path / "model.npz")
        X = rng.normal(size=(20, 4))
        np.testing.assert_array_equal(log_posterior(loaded, X), log_posterior(m, X))
        assert loaded.ridge == m.ridge

    def test_rejects_other_format(self, tmp_path):
        np.savez(tmp_path / "other.npz", format=np.array("something-else"))
        with pytest.raises(ValueError):
            load_model(tmp_path / "other.npz")
