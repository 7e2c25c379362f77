"""
Synthetic colored "faces" for experiments and tests.

Each class owns a luma texture (a mix of low-frequency cosine patterns) and a
mean chroma (a skin-tone-like Cb/Cr offset). Every image of the class adds
within-class texture variation, a random illumination ramp and RGB pixel
noise. chroma_share sets how much of the class identity sits in chroma
rather than in the luma texture.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from PIL import Image

from Scripts.ingest import RgbImage
from Scripts.preprocess import YCBCR, ChannelPlanes, ycbcr_to_rgb

logger = logging.getLogger(__name__)

SYNTHETIC_PATH = "./data/raw/synthetic"

N_CLASSES = 20
PER_CLASS = 10
SIZE = 32
CHROMA_SHARE = 0.7
NOISE = 5.0

# (row frequency, column frequency) pairs carrying the class texture;
# (0, 1) and (1, 0) are left to the illumination ramp
TEXTURE_BASES = ((1, 1), (0, 2), (2, 0), (1, 2), (2, 1), (2, 2), (0, 3), (3, 0), (1, 3), (3, 1), (2, 3), (3, 2))
LUMA_AMPLITUDE = 16.0 / (1.0 - CHROMA_SHARE)  # class texture std per basis is 16 at the default share
CHROMA_AMPLITUDE = 42.0 / CHROMA_SHARE  # class chroma offsets reach +-42 at the default share
WITHIN_CLASS_TEXTURE = 16.0
WITHIN_CLASS_CHROMA = 2.0
RAMP = 30.0


def _cosine_bases(size: int) -> np.ndarray:
    grid = (np.arange(size) + 0.5) / size
    return np.stack([
        np.outer(np.cos(np.pi * u * grid), np.cos(np.pi * v * grid))
        for u, v in TEXTURE_BASES
    ])


def make_colored_faces(
    n_classes: int = N_CLASSES,
    per_class: int = PER_CLASS,
    size: int = SIZE,
    chroma_share: float = CHROMA_SHARE,
    noise: float = NOISE,
    seed: int = 0,
) -> List[Tuple[str, List[RgbImage]]]:
    """[(label, images)] in label order; labels are s01, s02, ..."""
    if not 0.0 <= chroma_share <= 1.0:
        raise ValueError(f"chroma_share must lie in [0, 1], got {chroma_share}")
    if n_classes < 1 or per_class < 1 or size < 2:
        raise ValueError("need at least one class, one image per class and a 2x2 canvas")

    rng = np.random.default_rng(seed)
    bases = _cosine_bases(size)
    n_bases = len(TEXTURE_BASES)
    # higher frequencies vary more within a class
    spread = WITHIN_CLASS_TEXTURE * np.linspace(0.8, 2.0, n_bases)
    ramp = np.linspace(-0.5, 0.5, size)

    dataset = []
    for c in range(n_classes):
        texture = rng.normal(0.0, LUMA_AMPLITUDE * (1.0 - chroma_share), n_bases)
        chroma = rng.uniform(-1.0, 1.0, 2) * CHROMA_AMPLITUDE * chroma_share

        images = []
        for _ in range(per_class):
            coeffs = texture + rng.normal(0.0, spread)
            slope_y, slope_x = rng.uniform(-RAMP, RAMP, 2)
            luma = 128.0 + np.tensordot(coeffs, bases, axes=1) + np.add.outer(slope_y * ramp, slope_x * ramp)
            cb, cr = 128.0 + chroma + rng.normal(0.0, WITHIN_CLASS_CHROMA, 2)

            planes = ChannelPlanes(
                y=np.clip(luma, 0, 255),
                cb=np.full((size, size), np.clip(cb, 0, 255)),
                cr=np.full((size, size), np.clip(cr, 0, 255)),
                color_mode=YCBCR,
            )
            rgb = ycbcr_to_rgb(planes).to_array() + rng.normal(0.0, noise, (size, size, 3))
            images.append(RgbImage.from_array(np.clip(rgb, 0, 255)))
        dataset.append((f"s{c + 1:02d}", images))
    return dataset


def write_dataset(root: Union[str, Path], seed: int = 0, **kwargs) -> Path:
    """Store make_colored_faces output as <root>/<label>/<n>.ppm (binary PPM)."""
    root = Path(root)
    for label, images in make_colored_faces(seed=seed, **kwargs):
        class_dir = root / label
        class_dir.mkdir(parents=True, exist_ok=True)
        for j, img in enumerate(images, start=1):
            pixels = np.floor(img.to_array() + 0.5).astype(np.uint8)
            Image.fromarray(pixels).save(class_dir / f"{j:02d}.ppm")
    logger.info("Synthetic dataset written to %s", root)
    return root


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    root = write_dataset(SYNTHETIC_PATH)
    print(f"Synthetic faces exported to: {root}")


if __name__ == "__main__":
    main()
