"""
Color transform and lighting normalization ahead of DCT extraction.

Full-range (JFIF) YCbCr is used so every plane stays on [0, 255], the same
domain histogram equalization works on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from Scripts.errors import EmptyPlane
from Scripts.ingest import RgbImage

logger = logging.getLogger(__name__)

GRAYSCALE = "grayscale"
YCBCR = "ycbcr"
COLOR_MODES = (GRAYSCALE, YCBCR)

CHANNELS = {
    GRAYSCALE: ("Y",),
    YCBCR: ("Y", "Cb", "Cr"),
}

KR, KB = 0.299, 0.114
KG = 1.0 - KR - KB
CB_SCALE = 0.5 / (1.0 - KB)  # 0.564334...
CR_SCALE = 0.5 / (1.0 - KR)  # 0.713267...


@dataclass(frozen=True, eq=False)
class ChannelPlanes:
    y: np.ndarray
    cb: Optional[np.ndarray]
    cr: Optional[np.ndarray]
    color_mode: str

    def __post_init__(self) -> None:
        if self.color_mode not in COLOR_MODES:
            raise ValueError(f"unknown color mode: {self.color_mode}")
        if self.color_mode == YCBCR:
            if self.cb is None or self.cr is None:
                raise ValueError("ycbcr planes need Cb and Cr")
            if not (self.y.shape == self.cb.shape == self.cr.shape):
                raise ValueError("Y, Cb and Cr planes must share dimensions")

    @property
    def height(self) -> int:
        return int(self.y.shape[0])

    @property
    def width(self) -> int:
        return int(self.y.shape[1])

    def planes(self) -> Dict[str, np.ndarray]:
        """Meaningful planes keyed by channel name, in channel order."""
        if self.color_mode == GRAYSCALE:
            return {"Y": self.y}
        return {"Y": self.y, "Cb": self.cb, "Cr": self.cr}


def _luma(img: RgbImage) -> np.ndarray:
    # written around G so gray pixels (r = g = b) come out exactly equal to g
    return img.g + KR * (img.r - img.g) + KB * (img.b - img.g)


def rgb_to_ycbcr(img: RgbImage) -> ChannelPlanes:
    """
    Y  = 0.299 R + 0.587 G + 0.114 B
    Cb = 128 - 0.168736 R - 0.331264 G + 0.5 B
    Cr = 128 + 0.5 R - 0.418688 G - 0.081312 B

    Chroma is evaluated in the equivalent difference form (B - Y), (R - Y),
    which leaves gray content at exactly 128. Results are clamped to [0, 255].
    """
    y = _luma(img)
    cb = 128.0 + CB_SCALE * (img.b - y)
    cr = 128.0 + CR_SCALE * (img.r - y)
    return ChannelPlanes(
        y=np.clip(y, 0, 255),
        cb=np.clip(cb, 0, 255),
        cr=np.clip(cr, 0, 255),
        color_mode=YCBCR,
    )


def ycbcr_to_rgb(planes: ChannelPlanes) -> RgbImage:
    """Full-range inverse transform, clamped to [0, 255]."""
    if planes.color_mode != YCBCR:
        raise ValueError("inverse transform needs Y, Cb and Cr planes")
    y = planes.y
    cb = planes.cb - 128.0
    cr = planes.cr - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return RgbImage(np.clip(r, 0, 255), np.clip(g, 0, 255), np.clip(b, 0, 255))


def equalize(plane: np.ndarray) -> np.ndarray:
    """
    Standard histogram equalization over 256 bins:

        v' = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))

    where cdf_min is the cdf of the lowest occupied bin. A plane occupying a
    single bin is returned unchanged. Halves round up.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.size == 0:
        raise EmptyPlane("cannot equalize an empty plane")

    bins = np.clip(np.floor(plane + 0.5), 0, 255).astype(np.int64)
    cdf = np.cumsum(np.bincount(bins.ravel(), minlength=256))
    n = bins.size
    cdf_min = cdf[bins.min()]
    if cdf_min == n:
        return plane.copy()

    lut = np.floor(255.0 * (cdf - cdf_min) / (n - cdf_min) + 0.5)
    return lut[bins]


def prepare_channels(img: RgbImage, color_mode: str = YCBCR, equalize_chroma: bool = False) -> ChannelPlanes:
    """
    ycbcr: transform, then equalize Y (and Cb/Cr only when equalize_chroma).
    grayscale: equalized luma, no chroma.
    """
    if color_mode not in COLOR_MODES:
        raise ValueError(f"unknown color mode: {color_mode}")

    if color_mode == GRAYSCALE:
        y = np.clip(_luma(img), 0, 255)
        return ChannelPlanes(y=equalize(y), cb=None, cr=None, color_mode=GRAYSCALE)

    raw = rgb_to_ycbcr(img)
    cb, cr = raw.cb, raw.cr
    if equalize_chroma:
        cb, cr = equalize(cb), equalize(cr)
    return ChannelPlanes(y=equalize(raw.y), cb=cb, cr=cr, color_mode=YCBCR)
