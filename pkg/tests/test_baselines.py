import logging

import numpy as np
import pytest

from Scripts.baselines import (
    LDA,
    PCA,
    baseline_scores,
    classify_euclidean,
    fit_baseline,
    fit_lda,
    fit_pca,
    project_lda,
    project_pca,
    reconstruct_pca,
)
from Scripts.classify import classify_channel, train
from Scripts.errors import DimensionMismatch, TooFewClasses
from Scripts.pipeline import FeatureSettings
from Scripts.preprocess import GRAYSCALE, YCBCR


def _clusters(rng, n_classes, k, per_class=6, spread=4.0):
    return {
        f"id{i}": rng.normal(rng.normal(0.0, spread, k), 1.0, (per_class, k))
        for i in range(n_classes)
    }


def test_lda_needs_two_classes():
    with pytest.raises(TooFewClasses):
        fit_lda({"only": np.ones((3, 2))})


def test_lda_dimension_bounds():
    rng = np.random.default_rng(20)
    features = _clusters(rng, 3, 4)
    assert fit_lda(features).components.shape == (2, 4)
    with pytest.raises(DimensionMismatch):
        fit_lda(features, m=3)


def test_lda_components_are_within_class_whitened():
    rng = np.random.default_rng(21)
    model = fit_lda(_clusters(rng, 5, 6))
    gram = model.components @ (model.s_w + model.epsilon * np.eye(6)) @ model.components.T
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)
    assert np.all(np.diff(model.eigenvalues) <= 0)


def test_lda_two_well_separated_classes():
    features = {
        "left": np.array([[-10.0, 0.1], [-10.2, -0.1], [-9.8, 0.0]]),
        "right": np.array([[10.0, 0.0], [10.1, 0.2], [9.9, -0.2]]),
    }
    model = fit_lda(features)
    assert classify_euclidean(model.class_means_projected, project_lda(model, [-9.0, 0.0])) == 0
    assert classify_euclidean(model.class_means_projected, project_lda(model, [8.0, 0.3])) == 1


def test_full_rank_lda_agrees_with_map():
    rng = np.random.default_rng(22)
    for _ in range(10):
        features = _clusters(rng, 5, 6, spread=1.5)
        lda = fit_lda(features)
        map_model = train({label: {"Y": x} for label, x in features.items()})
        for x in rng.normal(0.0, 2.0, (40, 6)):
            by_lda = classify_euclidean(lda.class_means_projected, project_lda(lda, x))
            assert by_lda == classify_channel(map_model, x)[0]


def test_pca_components_orthonormal_and_sorted():
    rng = np.random.default_rng(23)
    model = fit_pca(_clusters(rng, 4, 5), m=5)
    np.testing.assert_allclose(model.components @ model.components.T, np.eye(5), atol=1e-10)
    assert np.all(np.diff(model.eigenvalues) <= 0)
    assert np.all(model.eigenvalues >= 0)


def test_pca_full_reconstruction():
    rng = np.random.default_rng(24)
    model = fit_pca(_clusters(rng, 3, 4), m=4)
    x = rng.normal(size=4)
    np.testing.assert_allclose(reconstruct_pca(model, project_pca(model, x)), x, atol=1e-10)


def test_pca_dimension_bounds():
    rng = np.random.default_rng(25)
    with pytest.raises(DimensionMismatch):
        fit_pca(_clusters(rng, 2, 3), m=4)


def test_euclidean_tie_takes_lowest_index():
    means = np.array([[1.0, 0.0], [-1.0, 0.0]])
    assert classify_euclidean(means, [0.0, 5.0]) == 0


def test_fit_baseline_scores_every_channel():
    rng = np.random.default_rng(26)
    settings = FeatureSettings(color_mode=YCBCR, k=3)
    features = {
        label: {ch: rng.normal(i, 0.1, (4, 3)) for ch in settings.channels}
        for i, label in enumerate(["a", "b", "c"])
    }
    for kind in (PCA, LDA):
        model = fit_baseline(kind, features, settings)
        assert model.labels == ["a", "b", "c"]
        probe = {ch: np.full(3, 2.0) for ch in settings.channels}
        scores = baseline_scores(model, probe)
        assert scores.shape == (3,)
        assert int(np.argmax(scores)) == 2
        assert np.all(scores <= 0)


def test_pca_default_dims_capped_by_data():
    rng = np.random.default_rng(27)
    settings = FeatureSettings(color_mode=GRAYSCALE, k=8)
    features = {label: {"Y": rng.normal(size=(3, 8))} for label in ("a", "b")}
    model = fit_baseline(PCA, features, settings)
    assert model.channel_models["Y"].components.shape == (6, 8)


def test_lda_default_dims_capped_by_k(caplog):
    rng = np.random.default_rng(28)
    settings = FeatureSettings(color_mode=GRAYSCALE, k=4)
    features = {label: {"Y": x} for label, x in _clusters(rng, 8, 4).items()}
    with caplog.at_level(logging.WARNING, logger="Scripts.baselines"):
        model = fit_baseline(LDA, features, settings)
    assert model.channel_models["Y"].components.shape == (4, 4)
    assert "LDA keeps 4 dimensions" in caplog.text


def test_lda_eigenpairs_solve_the_generalized_problem():
    rng = np.random.default_rng(29)
    model = fit_lda(_clusters(rng, 5, 6))
    regularized = model.s_w + model.epsilon * np.eye(6)
    for e, lam in zip(model.components, model.eigenvalues):
        residual = model.s_b @ e - lam * regularized @ e
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(model.s_b)


def test_lda_classes_sharing_a_mean_have_no_discriminant_power():
    rng = np.random.default_rng(30)
    left = rng.normal(size=(5, 3))
    right = 2 * left.mean(axis=0) - left
    model = fit_lda({"left": left, "right": right})
    assert abs(model.eigenvalues[0]) < 1e-8


def test_pca_reconstruction_error_shrinks_with_m():
    rng = np.random.default_rng(31)
    features = _clusters(rng, 3, 6)
    samples = np.vstack(list(features.values()))
    errors = []
    for m in range(1, 7):
        model = fit_pca(features, m=m)
        rebuilt = reconstruct_pca(model, project_pca(model, samples))
        errors.append(float(((samples - rebuilt) ** 2).sum()))
    assert all(later <= earlier + 1e-9 for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] == pytest.approx(0.0, abs=1e-9)


def test_euclidean_match_ignores_rotations():
    rng = np.random.default_rng(32)
    for _ in range(20):
        means = rng.normal(size=(6, 4))
        x = rng.normal(size=4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert classify_euclidean(means @ q, x @ q) == classify_euclidean(means, x)


def test_baseline_logs_class_counts(caplog):
    rng = np.random.default_rng(33)
    settings = FeatureSettings(color_mode=GRAYSCALE, k=3)
    features = {label: {"Y": rng.normal(size=(n, 3))} for label, n in (("a", 4), ("b", 5))}
    with caplog.at_level(logging.INFO, logger="Scripts.baselines"):
        fit_baseline(PCA, features, settings)
    assert "a=4, b=5" in caplog.text
