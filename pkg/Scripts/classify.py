"""
classify.py

MAP discriminant with a pooled within-class covariance.

With equal priors and one covariance C shared by all classes, the log
posterior of class i reduces (up to class-independent terms) to

    g_i(x) = mu_i C^-1 x^T - 0.5 mu_i C^-1 mu_i^T

and the decision is argmax_i g_i(x). C is the unnormalized sum of class
scatters, so adding a class only adds its own scatter: no existing class is
revisited.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from Scripts.errors import (
    DegenerateCovariance,
    DimensionMismatch,
    DuplicateLabel,
    IndexOutOfRange,
    MissingChannel,
)
from Scripts.features import PER_IMAGE_SORT, FeatureVector
from Scripts.pipeline import FeatureSettings
from Scripts.preprocess import CHANNELS, GRAYSCALE, YCBCR

logger = logging.getLogger(__name__)

EPSILON_SCALE = 1e-6
EPSILON_FLOOR = 1e-10

FeatureInput = Union[np.ndarray, Sequence[FeatureVector], Sequence[Sequence[float]]]
ProbeInput = Union[FeatureVector, np.ndarray, Sequence[float]]


@dataclass
class ClassStatistics:
    label: str
    count: int
    means: Dict[str, np.ndarray]
    # per-channel sum of (x - mu)(x - mu)^T; not kept by saved models
    scatters: Optional[Dict[str, np.ndarray]] = None


def as_sample_matrix(samples: FeatureInput) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        matrix = samples.astype(np.float64, copy=False)
    else:
        rows = [s.values if isinstance(s, FeatureVector) else np.asarray(s, dtype=np.float64) for s in samples]
        matrix = np.vstack(rows) if rows else np.empty((0, 0))
    if matrix.ndim == 1:
        matrix = matrix[np.newaxis, :]
    return matrix


def _as_vector(x: ProbeInput) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.values
    return np.asarray(x, dtype=np.float64).ravel()


def class_statistics(label: str, features: Mapping[str, FeatureInput], channels: Sequence[str], k: int) -> ClassStatistics:
    missing = [ch for ch in channels if ch not in features]
    if missing:
        raise MissingChannel(f"class '{label}' has no features for channel(s) {missing}")

    means, scatters = {}, {}
    count = None
    for channel in channels:
        samples = as_sample_matrix(features[channel])
        if samples.shape[0] == 0:
            raise DimensionMismatch(f"class '{label}' has no samples", module="classify")
        if samples.shape[1] != k:
            raise DimensionMismatch(
                f"class '{label}' channel {channel}: feature dimension {samples.shape[1]} != {k}",
                module="classify",
            )
        if count is None:
            count = samples.shape[0]
        elif samples.shape[0] != count:
            raise DimensionMismatch(f"class '{label}' has a different sample count per channel", module="classify")

        mu = samples.mean(axis=0)
        centered = samples - mu
        means[channel] = mu
        scatters[channel] = centered.T @ centered

    return ClassStatistics(label=label, count=int(count), means=means, scatters=scatters)


def regularization_epsilon(pooled: np.ndarray) -> float:
    """Trace-scaled ridge: max(1e-6 * trace(C) / k, 1e-10)."""
    k = pooled.shape[0]
    return max(EPSILON_SCALE * float(np.trace(pooled)) / k, EPSILON_FLOOR)


@dataclass
class MapModel:
    classes: List[ClassStatistics]
    pooled: Dict[str, np.ndarray]
    settings: FeatureSettings
    epsilon_override: Optional[float] = None
    epsilon: Dict[str, float] = field(default_factory=dict)
    _weights: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    _bias: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        labels = self.labels
        if not labels:
            raise DimensionMismatch("a model needs at least one class", module="classify")
        if len(set(labels)) != len(labels):
            raise DuplicateLabel(f"class labels must be unique: {labels}")
        self.refresh()

    @property
    def labels(self) -> List[str]:
        return [c.label for c in self.classes]

    @property
    def channels(self) -> Tuple[str, ...]:
        return self.settings.channels

    @property
    def k(self) -> int:
        return self.settings.k

    @property
    def color_mode(self) -> str:
        return self.settings.color_mode

    @property
    def selection_mode(self) -> str:
        return self.settings.selection_mode

    def mean_matrix(self, channel: str) -> np.ndarray:
        """M = [mu_1 ... mu_c]^T for one channel."""
        return np.vstack([c.means[channel] for c in self.classes])

    def refresh(self) -> None:
        """Recompute the regularized factorization and the linear score terms per channel."""
        for channel in self.channels:
            pooled = self.pooled[channel]
            eps = self.epsilon_override if self.epsilon_override is not None else regularization_epsilon(pooled)
            try:
                factor = linalg.cho_factor(pooled + eps * np.eye(self.k), lower=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise DegenerateCovariance(
                    f"channel {channel}: C_g + {eps:g} I is not positive definite ({exc})"
                ) from exc

            means = self.mean_matrix(channel)
            weights = linalg.cho_solve(factor, means.T)  # C^-1 mu_i^T, one column per class
            self.epsilon[channel] = eps
            self._weights[channel] = weights
            self._bias[channel] = -0.5 * np.einsum("ij,ji->i", means, weights)

    def inverse_apply(self, channel: str, x: np.ndarray) -> np.ndarray:
        """(C_g + eps I)^-1 x."""
        pooled = self.pooled[channel]
        factor = linalg.cho_factor(pooled + self.epsilon[channel] * np.eye(self.k), lower=True)
        return linalg.cho_solve(factor, x)


def _settings_for(features: Mapping[str, Mapping[str, FeatureInput]], settings: Optional[FeatureSettings]) -> FeatureSettings:
    if settings is not None:
        return settings
    first = next(iter(features.values()))
    color_mode = YCBCR if set(first) >= set(CHANNELS[YCBCR]) else GRAYSCALE
    k = as_sample_matrix(first["Y"]).shape[1] if "Y" in first else 0
    if k == 0:
        raise MissingChannel("features carry no Y channel")
    return FeatureSettings(color_mode=color_mode, k=k, selection_mode=PER_IMAGE_SORT)


def train(
    features: Mapping[str, Mapping[str, FeatureInput]],
    settings: Optional[FeatureSettings] = None,
    epsilon: Optional[float] = None,
) -> MapModel:
    """
    Build a MAP model from {label: {channel: samples}}. Class order follows the
    mapping's order. C_g is the plain sum of class scatters.
    """
    if not features:
        raise DimensionMismatch("training needs at least one class", module="classify")
    settings = _settings_for(features, settings)

    classes = [class_statistics(label, per_channel, settings.channels, settings.k) for label, per_channel in features.items()]
    pooled = {}
    for channel in settings.channels:
        total = np.zeros((settings.k, settings.k))
        for stats in classes:
            total = total + stats.scatters[channel]
        pooled[channel] = total

    model = MapModel(classes=classes, pooled=pooled, settings=settings, epsilon_override=epsilon)
    logger.info(
        "Trained MAP model: %d classes, k=%d, %s, epsilon=%s",
        len(classes), settings.k, settings.color_mode,
        {ch: f"{eps:.3g}" for ch, eps in model.epsilon.items()},
    )
    logger.info("Per-class training samples: %s", ", ".join(f"{s.label}={s.count}" for s in classes))
    return model


def add_class(model: MapModel, label: str, features: Mapping[str, FeatureInput]) -> MapModel:
    """
    Enroll a new class without touching the existing ones: append its mean,
    add its scatter to C_g, refresh the factorization. Returns a new model.
    """
    if label in model.labels:
        raise DuplicateLabel(f"class '{label}' is already enrolled")

    stats = class_statistics(label, features, model.channels, model.k)
    pooled = {ch: model.pooled[ch] + stats.scatters[ch] for ch in model.channels}
    updated = MapModel(
        classes=list(model.classes) + [stats],
        pooled=pooled,
        settings=model.settings,
        epsilon_override=model.epsilon_override,
    )
    logger.info("Added class %s (%d samples); now %d classes", label, stats.count, len(updated.classes))
    logger.info("No existing class statistic was re-read")
    return updated


def _probe(model: MapModel, x: ProbeInput, channel: str) -> np.ndarray:
    if channel not in model.channels:
        raise MissingChannel(f"model has no channel {channel}; channels are {model.channels}")
    vec = _as_vector(x)
    if vec.shape[0] != model.k:
        raise DimensionMismatch(f"probe has {vec.shape[0]} features, model expects {model.k}", module="classify")
    return vec


def channel_scores(model: MapModel, x: ProbeInput, channel: str = "Y") -> np.ndarray:
    """g_i(x) for every class i of one channel."""
    vec = _probe(model, x, channel)
    return vec @ model._weights[channel] + model._bias[channel]


def discriminant(model: MapModel, x: ProbeInput, class_index: int, channel: str = "Y") -> float:
    if not 0 <= class_index < len(model.classes):
        raise IndexOutOfRange(f"class index {class_index} out of range [0, {len(model.classes)})")
    vec = _probe(model, x, channel)
    return float(vec @ model._weights[channel][:, class_index] + model._bias[channel][class_index])


def log_posterior_scores(model: MapModel, x: ProbeInput, channel: str = "Y") -> np.ndarray:
    """g_i(x) with the class-independent -0.5 x C^-1 x^T term kept."""
    vec = _probe(model, x, channel)
    quadratic = -0.5 * float(vec @ model.inverse_apply(channel, vec))
    return quadratic + channel_scores(model, vec, channel)


def classify_channel(model: MapModel, x: ProbeInput, channel: str = "Y") -> Tuple[int, np.ndarray]:
    """Argmax of g_i(x); np.argmax keeps the lowest index on ties."""
    scores = channel_scores(model, x, channel)
    return int(np.argmax(scores)), scores


def classify_fused(
    model: MapModel,
    x_y: Optional[ProbeInput],
    x_cb: Optional[ProbeInput],
    x_cr: Optional[ProbeInput],
) -> Tuple[int, np.ndarray]:
    """Argmax over classes of the mean of the Y, Cb and Cr discriminants."""
    if model.color_mode != YCBCR:
        raise MissingChannel("fused classification needs a ycbcr model")
    missing = [name for name, x in (("Y", x_y), ("Cb", x_cb), ("Cr", x_cr)) if x is None]
    if missing:
        raise MissingChannel(f"fused classification is missing channel(s) {missing}")

    per_channel = np.vstack([
        channel_scores(model, x_y, "Y"),
        channel_scores(model, x_cb, "Cb"),
        channel_scores(model, x_cr, "Cr"),
    ])
    fused = per_channel.mean(axis=0)
    return int(np.argmax(fused)), fused


def probe_scores(model: MapModel, vectors: Mapping[str, ProbeInput]) -> np.ndarray:
    """Score list for one probe in the model's own mode."""
    if model.color_mode == GRAYSCALE:
        if "Y" not in vectors:
            raise MissingChannel("grayscale probe needs a Y feature vector")
        return channel_scores(model, vectors["Y"], "Y")
    return classify_fused(model, vectors.get("Y"), vectors.get("Cb"), vectors.get("Cr"))[1]
