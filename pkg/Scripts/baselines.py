"""
PCA (eigenfaces) and classical LDA (Fisherfaces) on the same DCT features
as the MAP model, matched by Euclidean distance to projected class means.

Both need every training sample again when a class is added, which is the
retraining cost the MAP model avoids.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Union

import numpy as np
from scipy import linalg
from sklearn import decomposition

from Scripts.classify import FeatureInput, ProbeInput, as_sample_matrix, regularization_epsilon
from Scripts.errors import DimensionMismatch, MissingChannel, TooFewClasses
from Scripts.features import FeatureVector
from Scripts.pipeline import FeatureSettings

logger = logging.getLogger(__name__)

PCA = "pca"
LDA = "lda"
BASELINE_KINDS = (PCA, LDA)

DEFAULT_PCA_DIMS = 40


@dataclass
class LdaModel:
    components: np.ndarray  # E, one eigenvector per row (m x k)
    eigenvalues: np.ndarray
    mean: np.ndarray  # global training mean
    class_means_projected: np.ndarray  # c x m
    s_b: np.ndarray
    s_w: np.ndarray
    epsilon: float


@dataclass
class PcaModel:
    components: np.ndarray  # m x k, orthonormal rows
    eigenvalues: np.ndarray
    mean: np.ndarray
    class_means_projected: np.ndarray  # c x m


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _class_matrices(features: Mapping[str, FeatureInput]) -> List[np.ndarray]:
    matrices = [as_sample_matrix(samples) for samples in features.values()]
    dims = {m.shape[1] for m in matrices}
    if len(dims) != 1:
        raise DimensionMismatch(f"classes disagree on feature dimension: {sorted(dims)}", module="baselines")
    return matrices


def fit_lda(features: Mapping[str, FeatureInput], m: Optional[int] = None) -> LdaModel:
    """
    Fisher directions maximizing |E^T S_b E| / |E^T S_w E|, from the symmetric
    generalized problem S_b e = lambda (S_w + eps I) e. Eigenvectors are
    normalized so that e^T (S_w + eps I) e = 1.
    """
    if len(features) < 2:
        raise TooFewClasses(f"LDA needs at least two classes, got {len(features)}")
    matrices = _class_matrices(features)
    c = len(matrices)
    k = matrices[0].shape[1]
    if m is None:
        m = min(c - 1, k)
        if m < c - 1:
            logger.warning("LDA keeps %d dimensions (k = %d caps the %d a %d-class problem allows)", m, k, c - 1, c)
    if not 1 <= m <= min(c - 1, k):
        raise DimensionMismatch(f"LDA dimension m = {m} must lie in [1, {min(c - 1, k)}]", module="baselines")

    everything = np.vstack(matrices)
    global_mean = everything.mean(axis=0)
    class_means = np.vstack([x.mean(axis=0) for x in matrices])

    s_w = np.zeros((k, k))
    s_b = np.zeros((k, k))
    for x, mu in zip(matrices, class_means):
        centered = x - mu
        s_w = s_w + centered.T @ centered
        offset = (mu - global_mean)[:, np.newaxis]
        s_b = s_b + x.shape[0] * (offset @ offset.T)

    eps = regularization_epsilon(s_w)
    eigenvalues, eigenvectors = linalg.eigh(s_b, s_w + eps * np.eye(k))
    order = np.argsort(eigenvalues)[::-1][:m]
    components = _fix_signs(eigenvectors[:, order]).T

    return LdaModel(
        components=components,
        eigenvalues=eigenvalues[order],
        mean=global_mean,
        class_means_projected=(class_means - global_mean) @ components.T,
        s_b=s_b,
        s_w=s_w,
        epsilon=eps,
    )


def project_lda(model: LdaModel, x: ProbeInput) -> np.ndarray:
    """Y = E (x - m), with m the global training mean."""
    vec = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if vec.shape[-1] != model.mean.shape[0]:
        raise DimensionMismatch(f"expected {model.mean.shape[0]} features, got {vec.shape[-1]}", module="baselines")
    return (vec - model.mean) @ model.components.T


def fit_pca(features: Mapping[str, FeatureInput], m: int = DEFAULT_PCA_DIMS) -> PcaModel:
    """Eigenfaces: the top-m principal axes of the pooled training features."""
    matrices = _class_matrices(features)
    everything = np.vstack(matrices)
    n, k = everything.shape
    if not 1 <= m <= min(k, n):
        raise DimensionMismatch(f"PCA dimension m = {m} must lie in [1, {min(k, n)}]", module="baselines")

    pca = decomposition.PCA(n_components=m, svd_solver="full").fit(everything)
    components = _fix_signs(pca.components_.T).T

    class_means = np.vstack([x.mean(axis=0) for x in matrices])
    return PcaModel(
        components=components,
        eigenvalues=np.clip(pca.explained_variance_, 0.0, None),
        mean=pca.mean_,
        class_means_projected=(class_means - pca.mean_) @ components.T,
    )


def project_pca(model: PcaModel, x: ProbeInput) -> np.ndarray:
    vec = x.values if isinstance(x, FeatureVector) else np.asarray(x, dtype=np.float64)
    if vec.shape[-1] != model.mean.shape[0]:
        raise DimensionMismatch(f"expected {model.mean.shape[0]} features, got {vec.shape[-1]}", module="baselines")
    return (vec - model.mean) @ model.components.T


def reconstruct_pca(model: PcaModel, y: np.ndarray) -> np.ndarray:
    return model.mean + np.asarray(y) @ model.components


def _distances(projected_means: np.ndarray, projected_x: np.ndarray) -> np.ndarray:
    return np.sqrt(((np.asarray(projected_means) - np.asarray(projected_x)) ** 2).sum(axis=1))


def classify_euclidean(projected_means: np.ndarray, projected_x: np.ndarray) -> int:
    """Nearest projected class mean; lowest index on ties."""
    return int(np.argmin(_distances(projected_means, projected_x)))


@dataclass
class BaselineModel:
    kind: str
    labels: List[str]
    channel_models: Dict[str, Union[PcaModel, LdaModel]]
    settings: FeatureSettings

    @property
    def channels(self):
        return self.settings.channels


def _count_line(features: Mapping[str, Mapping[str, FeatureInput]], channel: str) -> str:
    return ", ".join(f"{label}={as_sample_matrix(per_channel[channel]).shape[0]}" for label, per_channel in features.items())


def fit_baseline(
    kind: str,
    features: Mapping[str, Mapping[str, FeatureInput]],
    settings: FeatureSettings,
    m: Optional[int] = None,
) -> BaselineModel:
    """
    Fit one PCA or LDA per channel. Without an explicit m, LDA keeps
    min(c - 1, k) dimensions and PCA keeps 40, capped by what the data supports.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind: {kind}")
    labels = list(features)
    channel_models = {}
    for channel in settings.channels:
        per_class = {label: features[label][channel] for label in labels}
        if kind == LDA:
            channel_models[channel] = fit_lda(per_class, m)
        else:
            dims = m
            if dims is None:
                n = sum(as_sample_matrix(s).shape[0] for s in per_class.values())
                dims = min(DEFAULT_PCA_DIMS, settings.k, n)
                if dims < DEFAULT_PCA_DIMS:
                    logger.warning("PCA keeps %d components (data supports no more than that)", dims)
            channel_models[channel] = fit_pca(per_class, dims)

    logger.info(
        "Fitted %s baseline: %d classes, k=%d, channels %s", kind.upper(), len(labels), settings.k, list(settings.channels)
    )
    if kind == LDA:
        logger.info("LDA epsilon: %s", {ch: f"{fitted.epsilon:.3g}" for ch, fitted in channel_models.items()})
    logger.info("Per-class training samples: %s", _count_line(features, settings.channels[0]))
    return BaselineModel(kind=kind, labels=labels, channel_models=channel_models, settings=settings)


def baseline_scores(model: BaselineModel, vectors: Mapping[str, ProbeInput]) -> np.ndarray:
    """
    Negative Euclidean distance to every projected class mean (higher is more
    similar), averaged over channels.
    """
    per_channel = []
    for channel in model.channels:
        if channel not in vectors or vectors[channel] is None:
            raise MissingChannel(f"probe is missing channel {channel}", module="baselines")
        fitted = model.channel_models[channel]
        project = project_lda if isinstance(fitted, LdaModel) else project_pca
        per_channel.append(-_distances(fitted.class_means_projected, project(fitted, vectors[channel])))
    return np.vstack(per_channel).mean(axis=0)
