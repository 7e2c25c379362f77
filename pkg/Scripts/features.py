"""
Non-blocked DCT features.

The whole channel plane is transformed as one block (1-D DCT-II over every
row, then over every column of the result) and the k largest-magnitude
coefficients become the feature vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from Scripts.errors import BadMask, DimensionMismatch, EmptyPlane, EmptySignal, InvalidK, KTooLarge

logger = logging.getLogger(__name__)

PER_IMAGE_SORT = "per_image_sort"
FIXED_MASK = "fixed_mask"
SELECTION_MODES = (PER_IMAGE_SORT, FIXED_MASK)

DEFAULT_K = 64
MAX_RECOMMENDED_K = 99


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    coeffs: np.ndarray

    @property
    def source_dims(self) -> Tuple[int, int]:
        return tuple(self.coeffs.shape)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    channel: str
    selection_mode: str = PER_IMAGE_SORT
    mask: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return int(self.values.shape[0])


def dct1d(signal: Sequence[float]) -> np.ndarray:
    """Orthonormal DCT-II."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptySignal("DCT needs a nonempty 1-D signal")
    return fft.dct(x, type=2, norm="ortho")


def idct1d(coeffs: Sequence[float]) -> np.ndarray:
    x = np.asarray(coeffs, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptySignal("inverse DCT needs a nonempty 1-D signal")
    return fft.idct(x, type=2, norm="ortho")


def _as_plane(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.size == 0:
        raise EmptyPlane(f"expected a nonempty matrix, got shape {plane.shape}", module="features")
    return plane


def dct_decompose(plane: np.ndarray) -> FrequencyMatrix:
    """Row pass, then column pass, over the entire plane (no 8x8 blocking)."""
    plane = _as_plane(plane)
    rows_done = fft.dct(plane, type=2, norm="ortho", axis=1)
    return FrequencyMatrix(fft.dct(rows_done, type=2, norm="ortho", axis=0))


def idct_compose(freq: FrequencyMatrix) -> np.ndarray:
    """Inverse of dct_decompose."""
    coeffs = _as_plane(freq.coeffs)
    cols_done = fft.idct(coeffs, type=2, norm="ortho", axis=0)
    return fft.idct(cols_done, type=2, norm="ortho", axis=1)


def _check_k(k: int, size: int) -> None:
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if k > size:
        raise KTooLarge(f"k = {k} exceeds the {size} available coefficients")


def _rank_by_magnitude(magnitudes: np.ndarray) -> np.ndarray:
    # descending magnitude, ties broken by ascending flat index
    return np.lexsort((np.arange(magnitudes.size), -magnitudes))


def select_features(
    freq: FrequencyMatrix,
    k: int = DEFAULT_K,
    mode: str = PER_IMAGE_SORT,
    mask: Optional[Sequence[int]] = None,
    channel: str = "Y",
) -> FeatureVector:
    """
    per_image_sort: flatten row-major, order by descending |value| and keep the
    first k signed values.
    fixed_mask: gather the signed values at the mask's flat indices, in mask order.
    """
    flat = freq.coeffs.ravel()
    _check_k(k, flat.size)

    if mode == PER_IMAGE_SORT:
        order = _rank_by_magnitude(np.abs(flat))[:k]
        return FeatureVector(values=flat[order].copy(), channel=channel, selection_mode=mode)

    if mode == FIXED_MASK:
        if mask is None:
            raise BadMask("fixed_mask selection needs a mask")
        idx = np.asarray(mask, dtype=np.int64)
        if idx.ndim != 1 or idx.size != k:
            raise BadMask(f"mask must hold exactly k = {k} indices, got {idx.size}")
        if np.unique(idx).size != idx.size:
            raise BadMask("mask indices must be distinct")
        if idx.min() < 0 or idx.max() >= flat.size:
            raise BadMask(f"mask indices must lie in [0, {flat.size})")
        return FeatureVector(values=flat[idx].copy(), channel=channel, selection_mode=mode, mask=idx)

    raise ValueError(f"unknown selection mode: {mode}")


def build_fixed_mask(training_planes: Sequence[np.ndarray], k: int = DEFAULT_K) -> np.ndarray:
    """
    Flat indices of the k largest entries of the mean |DCT| over the training
    planes, in descending mean-magnitude order (ties by ascending index).
    """
    if len(training_planes) == 0:
        raise DimensionMismatch("at least one training plane is needed to build a mask")

    shape = np.asarray(training_planes[0]).shape
    total = None
    for plane in training_planes:
        if np.asarray(plane).shape != shape:
            raise DimensionMismatch(f"training planes differ in shape: {shape} vs {np.asarray(plane).shape}")
        magnitude = np.abs(dct_decompose(plane).coeffs)
        total = magnitude if total is None else total + magnitude

    mean_magnitude = (total / len(training_planes)).ravel()
    _check_k(k, mean_magnitude.size)
    return _rank_by_magnitude(mean_magnitude)[:k].astype(np.int64)
