"""
ingest.py

Loads face databases laid out one directory per class:

    <root>/<class_label>/<image files>

- scan_dataset builds a deterministic, per-class stratified train/test index
- load_image decodes PGM/PPM (binary and ASCII), PNG and friends to RGB planes
- resize resamples every plane bilinearly to a canonical resolution
"""

from __future__ import annotations

import hashlib
import logging
import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Tuple, Union

import numpy as np
import pandas as pd
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from Scripts.errors import (
    ClassTooSmall,
    CorruptFile,
    EmptyDataset,
    IngestError,
    IoFailure,
    UnreadableImage,
    UnsupportedFormat,
    ZeroDimension,
)

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".pgm", ".ppm", ".pnm", ".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff"}
DEFAULT_SIZE = (128, 128)
DEFAULT_TRAIN_PER_CLASS = 5
DEFAULT_SEED = 0

TRAIN = "train"
TEST = "test"

# a per-class train count, or a ratio in (0, 1)
SplitSpec = Union[int, float]


@dataclass(frozen=True, eq=False)
class RgbImage:
    r: np.ndarray
    g: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        planes = []
        for name in ("r", "g", "b"):
            plane = np.asarray(getattr(self, name), dtype=np.float64)
            if plane.ndim != 2 or plane.size == 0:
                raise ZeroDimension(f"plane {name} must be a nonempty matrix, got shape {plane.shape}")
            planes.append(plane)
            object.__setattr__(self, name, plane)
        if not (planes[0].shape == planes[1].shape == planes[2].shape):
            raise ValueError(f"plane shapes differ: {[p.shape for p in planes]}")
        stacked = np.stack(planes)
        if not np.all(np.isfinite(stacked)) or stacked.min() < 0 or stacked.max() > 255:
            raise ValueError("intensities must be finite and within [0, 255]")

    @property
    def height(self) -> int:
        return int(self.r.shape[0])

    @property
    def width(self) -> int:
        return int(self.r.shape[1])

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "RgbImage":
        """Build from an (H, W) grayscale or (H, W, 3) RGB array."""
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim == 2:
            return cls(pixels, pixels.copy(), pixels.copy())
        if pixels.ndim == 3 and pixels.shape[2] == 3:
            return cls(pixels[..., 0], pixels[..., 1], pixels[..., 2])
        raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got {pixels.shape}")

    def to_array(self) -> np.ndarray:
        return np.stack([self.r, self.g, self.b], axis=-1)


@dataclass(frozen=True)
class DatasetIndex:
    root: Path
    classes: Tuple[Tuple[str, Tuple[Path, ...]], ...]
    split_assignment: Mapping[Path, str]

    @property
    def labels(self) -> List[str]:
        return [label for label, _ in self.classes]

    def _items(self, tag: str) -> List[Tuple[str, Path]]:
        return [
            (label, path)
            for label, paths in self.classes
            for path in paths
            if self.split_assignment[path] == tag
        ]

    def train_items(self) -> List[Tuple[str, Path]]:
        return self._items(TRAIN)

    def test_items(self) -> List[Tuple[str, Path]]:
        return self._items(TEST)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"label": label, "path": str(path), "split": self.split_assignment[path]}
                for label, paths in self.classes
                for path in paths
            ],
            columns=["label", "path", "split"],
        )


def _is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS


def list_class_images(class_dir: Union[str, Path]) -> List[Path]:
    """
    Image files of one class directory, sorted by name. Other files are
    skipped with a warning.
    """
    class_dir = Path(class_dir)
    if not class_dir.is_dir():
        raise EmptyDataset(f"class directory not found: {class_dir}")

    images: List[Path] = []
    for entry in sorted(class_dir.iterdir(), key=lambda p: p.name):
        if entry.name.startswith("."):
            continue
        if _is_image_file(entry):
            images.append(entry)
        else:
            logger.warning("Ignoring non-image entry: %s", entry)
    return images


def _train_count(split_spec: SplitSpec, n_images: int, label: str) -> int:
    if isinstance(split_spec, bool):
        raise IngestError("split_spec must be an int count or a float ratio")
    if isinstance(split_spec, float):
        if not 0.0 < split_spec < 1.0:
            raise IngestError(f"train ratio must be in (0, 1), got {split_spec}")
        n_train = max(1, math.floor(split_spec * n_images))
    else:
        n_train = int(split_spec)
        if n_train < 1:
            raise IngestError(f"train count must be >= 1, got {split_spec}")

    # at least one test image has to remain
    if n_train >= n_images:
        raise ClassTooSmall(
            f"class '{label}' has {n_images} image(s); cannot take {n_train} for training "
            f"and keep a test image"
        )
    return n_train


def _check_decodable(path: Path) -> None:
    try:
        with Image.open(path) as im:
            im.verify()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise UnreadableImage(f"cannot decode image: {path} ({exc})") from exc


def scan_dataset(
    root_path: Union[str, Path],
    split_spec: SplitSpec = DEFAULT_TRAIN_PER_CLASS,
    seed: int = DEFAULT_SEED,
) -> DatasetIndex:
    """
    Index a class-per-directory database and split every class into train
    and test with a seeded shuffle. Classes are ordered lexicographically by
    label; that order defines the class index used downstream.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise EmptyDataset(f"dataset root not found: {root}")
    if seed < 0:
        raise IngestError(f"seed must be non-negative, got {seed}")

    class_dirs = sorted(
        (p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")),
        key=lambda p: p.name,
    )
    if not class_dirs:
        raise EmptyDataset(f"no class directories under {root}")

    classes: List[Tuple[str, Tuple[Path, ...]]] = []
    split: Dict[Path, str] = {}

    for class_dir in class_dirs:
        label = class_dir.name
        paths = list_class_images(class_dir)
        for path in paths:
            _check_decodable(path)

        n_train = _train_count(split_spec, len(paths), label)

        # seeded per label so adding a class never reshuffles the others
        rng = np.random.default_rng([seed, zlib.crc32(label.encode("utf-8"))])
        train_positions = set(rng.permutation(len(paths))[:n_train].tolist())
        for pos, path in enumerate(paths):
            split[path] = TRAIN if pos in train_positions else TEST

        classes.append((label, tuple(paths)))

    index = DatasetIndex(root=root, classes=tuple(classes), split_assignment=split)
    logger.info(
        "Scanned %s: %d classes, %d train / %d test images",
        root, len(classes), len(index.train_items()), len(index.test_items()),
    )
    return index


def dataset_hash(index: DatasetIndex) -> str:
    """SHA-256 over labels, relative paths, split tags and file contents."""
    digest = hashlib.sha256()
    for label, paths in index.classes:
        for path in paths:
            rel = path.relative_to(index.root).as_posix() if path.is_relative_to(index.root) else path.name
            digest.update(f"{label}\0{rel}\0{index.split_assignment[path]}\0".encode("utf-8"))
            digest.update(path.read_bytes())
    return digest.hexdigest()


def _pixels_from_pil(im: Image.Image) -> np.ndarray:
    mode = im.mode
    if mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
        # 16-bit grayscale
        pixels = np.asarray(im, dtype=np.float64)
        return np.clip(pixels * (255.0 / 65535.0), 0, 255)
    if mode == "F":
        return np.clip(np.asarray(im, dtype=np.float64), 0, 255)
    if mode in ("1", "L", "LA"):
        return np.asarray(im.convert("L"), dtype=np.float64)
    return np.asarray(im.convert("RGB"), dtype=np.float64)


def load_image(path: Union[str, Path]) -> RgbImage:
    """
    Decode an image file to RGB planes in [0, 255]. Grayscale files yield
    r = g = b.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            pixels = _pixels_from_pil(im)
    except FileNotFoundError as exc:
        raise IoFailure(f"image not found: {path}", module="ingest") from exc
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"unsupported image format: {path}") from exc
    except (OSError, SyntaxError, ValueError, EOFError) as exc:
        raise CorruptFile(f"corrupt or truncated image: {path} ({exc})") from exc

    return RgbImage.from_array(pixels)


def _sample_positions(n_in: int, n_out: int) -> np.ndarray:
    # corner-aligned: first and last samples land on the first and last pixel
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def resize(img: RgbImage, target_w: int, target_h: int) -> RgbImage:
    """Bilinear resampling of every plane to exactly (target_w, target_h)."""
    if target_w < 1 or target_h < 1:
        raise ZeroDimension(f"target size must be at least 1x1, got {target_w}x{target_h}")
    if (img.width, img.height) == (target_w, target_h):
        return RgbImage(img.r.copy(), img.g.copy(), img.b.copy())

    rows, cols = np.meshgrid(
        _sample_positions(img.height, target_h),
        _sample_positions(img.width, target_w),
        indexing="ij",
    )
    planes = [
        np.clip(ndimage.map_coordinates(plane, [rows, cols], order=1, mode="nearest"), 0, 255)
        for plane in (img.r, img.g, img.b)
    ]
    return RgbImage(*planes)
