"""
Glue between images and models: train any classifier kind from images, score
a probe image, rank classes, enroll a new class into a MAP model.
"""

from __future__ import annotations

import logging
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from Scripts.baselines import BASELINE_KINDS, baseline_scores, fit_baseline
from Scripts.classify import MapModel, add_class, probe_scores, train
from Scripts.errors import ConfigMismatch
from Scripts.features import FeatureVector
from Scripts.ingest import RgbImage
from Scripts.model_file import MAP, AnyModel
from Scripts.pipeline import FeatureExtractor, FeatureSettings, extract_training_features, image_planes

logger = logging.getLogger(__name__)


def train_model(
    kind: str,
    images: Sequence[Tuple[str, RgbImage]],
    settings: FeatureSettings,
    m: Optional[int] = None,
    epsilon: Optional[float] = None,
) -> AnyModel:
    features, fitted = extract_training_features(images, settings)
    if kind == MAP:
        return train(features, fitted, epsilon)
    if kind in BASELINE_KINDS:
        return fit_baseline(kind, features, fitted, m)
    raise ConfigMismatch(f"unknown classifier: {kind}")


def model_scores(model: AnyModel, vectors: Mapping[str, FeatureVector]) -> np.ndarray:
    if isinstance(model, MapModel):
        return probe_scores(model, vectors)
    return baseline_scores(model, vectors)


def probe_vectors(model: AnyModel, img: RgbImage):
    return FeatureExtractor(model.settings).transform(image_planes(img, model.settings))


def score_image(model: AnyModel, img: RgbImage) -> np.ndarray:
    return model_scores(model, probe_vectors(model, img))


def rank_classes(model: AnyModel, scores: np.ndarray, top: Optional[int] = None) -> pd.DataFrame:
    """Classes by descending score; equal scores keep class order."""
    order = np.argsort(-scores, kind="stable")
    if top is not None:
        order = order[:top]
    return pd.DataFrame(
        {
            "rank": np.arange(1, order.size + 1),
            "label": [model.labels[i] for i in order],
            "score": scores[order],
        }
    )


def enroll_class(model: AnyModel, label: str, images: Sequence[RgbImage]) -> MapModel:
    """
    Add a class to a trained MAP model from its images alone, using the
    model's own feature settings (and masks). Baselines must be retrained.
    """
    if not isinstance(model, MapModel):
        raise ConfigMismatch(f"{model.kind.upper()} models cannot add classes without retraining")

    logger.info("Enrolling %s from %d image(s)", label, len(images))
    extractor = FeatureExtractor(model.settings)
    per_channel = {channel: [] for channel in model.channels}
    for img in images:
        for channel, vec in extractor.transform(image_planes(img, model.settings)).items():
            per_channel[channel].append(vec)
    return add_class(model, label, per_channel)
