"""
Image to feature-vector pipeline: load, resize, color transform, equalize,
non-blocked DCT, coefficient selection. Training and probe images go through
exactly the same steps, driven by the FeatureSettings stored with the model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from Scripts.errors import ConfigMismatch, InvalidK
from Scripts.features import (
    DEFAULT_K,
    FIXED_MASK,
    MAX_RECOMMENDED_K,
    PER_IMAGE_SORT,
    SELECTION_MODES,
    FeatureVector,
    build_fixed_mask,
    dct_decompose,
    select_features,
)
from Scripts.ingest import DEFAULT_SIZE, RgbImage, load_image, resize
from Scripts.preprocess import CHANNELS, COLOR_MODES, YCBCR, ChannelPlanes, prepare_channels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureSettings:
    size: Tuple[int, int] = DEFAULT_SIZE
    color_mode: str = YCBCR
    k: int = DEFAULT_K
    selection_mode: str = PER_IMAGE_SORT
    equalize_chroma: bool = False
    masks: Optional[Mapping[str, Tuple[int, ...]]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.color_mode not in COLOR_MODES:
            raise ConfigMismatch(f"unknown color mode: {self.color_mode}")
        if self.selection_mode not in SELECTION_MODES:
            raise ConfigMismatch(f"unknown selection mode: {self.selection_mode}")
        if self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k}")
        if self.size[0] < 1 or self.size[1] < 1:
            raise ConfigMismatch(f"canonical size must be at least 1x1, got {self.size}")

    @property
    def channels(self) -> Tuple[str, ...]:
        return CHANNELS[self.color_mode]


def image_planes(img: RgbImage, settings: FeatureSettings) -> ChannelPlanes:
    width, height = settings.size
    return prepare_channels(resize(img, width, height), settings.color_mode, settings.equalize_chroma)


def load_planes(path: Union[str, Path], settings: FeatureSettings) -> ChannelPlanes:
    return image_planes(load_image(path), settings)


class FeatureExtractor:
    """
    Turns channel planes into {channel: FeatureVector}. In fixed_mask mode the
    masks come either from the settings (a trained model) or from fit().
    """

    def __init__(self, settings: FeatureSettings):
        if settings.k > MAX_RECOMMENDED_K:
            logger.warning("k = %d exceeds %d coefficients; features are no longer compact", settings.k, MAX_RECOMMENDED_K)
        self.settings = settings

    @property
    def is_fitted(self) -> bool:
        return self.settings.selection_mode == PER_IMAGE_SORT or self.settings.masks is not None

    def fit(self, training_planes: Sequence[ChannelPlanes]) -> "FeatureExtractor":
        if self.settings.selection_mode != FIXED_MASK:
            return self
        masks = {}
        for channel in self.settings.channels:
            stack = [planes.planes()[channel] for planes in training_planes]
            masks[channel] = tuple(int(i) for i in build_fixed_mask(stack, self.settings.k))
            logger.debug("Fixed mask for %s: %s", channel, masks[channel][:8])
        self.settings = replace(self.settings, masks=masks)
        return self

    def transform(self, planes: ChannelPlanes) -> Dict[str, FeatureVector]:
        if not self.is_fitted:
            raise ConfigMismatch("fixed_mask extractor used before fit()")
        if planes.color_mode != self.settings.color_mode:
            raise ConfigMismatch(f"planes are {planes.color_mode}, model expects {self.settings.color_mode}")

        vectors = {}
        available = planes.planes()
        for channel in self.settings.channels:
            mask = self.settings.masks[channel] if self.settings.selection_mode == FIXED_MASK else None
            vectors[channel] = select_features(
                dct_decompose(available[channel]),
                self.settings.k,
                self.settings.selection_mode,
                mask=mask,
                channel=channel,
            )
        return vectors


def stack_by_class(
    labels: Sequence[str],
    vectors: Sequence[Mapping[str, FeatureVector]],
) -> Dict[str, Dict[str, np.ndarray]]:
    """Group per-image feature vectors into {label: {channel: (m, k) matrix}}, first-seen label order."""
    grouped: Dict[str, Dict[str, List[np.ndarray]]] = {}
    for label, per_channel in zip(labels, vectors):
        slot = grouped.setdefault(label, {})
        for channel, vec in per_channel.items():
            slot.setdefault(channel, []).append(vec.values)
    return {
        label: {channel: np.vstack(rows) for channel, rows in per_channel.items()}
        for label, per_channel in grouped.items()
    }


def extract_training_features(
    items: Iterable[Tuple[str, RgbImage]],
    settings: FeatureSettings,
) -> Tuple[Dict[str, Dict[str, np.ndarray]], FeatureSettings]:
    """
    Fit the extractor on the training images (masks in fixed_mask mode) and
    return the grouped features together with the fitted settings.
    """
    labels: List[str] = []
    planes: List[ChannelPlanes] = []
    for label, img in items:
        labels.append(label)
        planes.append(image_planes(img, settings))

    extractor = FeatureExtractor(settings).fit(planes)
    vectors = [extractor.transform(p) for p in planes]
    return stack_by_class(labels, vectors), extractor.settings


def load_items(items: Iterable[Tuple[str, Path]]) -> List[Tuple[str, RgbImage]]:
    return [(label, load_image(path)) for label, path in items]
