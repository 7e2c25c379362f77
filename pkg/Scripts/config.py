"""
Run configuration: defaults, validation and a flat `key = value` text format
that round-trips losslessly. Command-line flags override file values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from Scripts.baselines import BASELINE_KINDS, BaselineModel
from Scripts.errors import ConfigError, IoFailure
from Scripts.features import DEFAULT_K, PER_IMAGE_SORT, SELECTION_MODES
from Scripts.fileio import atomic_write
from Scripts.ingest import DEFAULT_SEED, DEFAULT_SIZE, DEFAULT_TRAIN_PER_CLASS, SplitSpec
from Scripts.model_file import MAP, AnyModel
from Scripts.pipeline import FeatureSettings
from Scripts.preprocess import COLOR_MODES, YCBCR

logger = logging.getLogger(__name__)

RAW_PATH = "./data/raw"
PROCESSED_PATH = "./data/processed"
MODEL_FILE = "model.mapf"
CLASSIFIERS = (MAP,) + BASELINE_KINDS
DEFAULT_TOP = 5


@dataclass(frozen=True)
class RunConfig:
    data_root: str = RAW_PATH
    out_dir: str = PROCESSED_PATH
    model_path: Optional[str] = None
    train_per_class: int = DEFAULT_TRAIN_PER_CLASS
    train_ratio: Optional[float] = None
    seed: int = DEFAULT_SEED
    size: Tuple[int, int] = DEFAULT_SIZE
    color_mode: str = YCBCR
    k: int = DEFAULT_K
    selection_mode: str = PER_IMAGE_SORT
    classifier: str = MAP
    m: Optional[int] = None
    epsilon: Optional[float] = None
    equalize_chroma: bool = False
    top: int = DEFAULT_TOP

    @property
    def split_spec(self) -> SplitSpec:
        return self.train_ratio if self.train_ratio is not None else self.train_per_class

    def resolved_model_path(self) -> Path:
        return Path(self.model_path) if self.model_path else Path(self.out_dir) / MODEL_FILE

    def feature_settings(self) -> FeatureSettings:
        return FeatureSettings(
            size=self.size,
            color_mode=self.color_mode,
            k=self.k,
            selection_mode=self.selection_mode,
            equalize_chroma=self.equalize_chroma,
        )

    def validate(self) -> "RunConfig":
        problems = []
        if self.color_mode not in COLOR_MODES:
            problems.append(f"color_mode must be one of {COLOR_MODES}")
        if self.selection_mode not in SELECTION_MODES:
            problems.append(f"selection_mode must be one of {SELECTION_MODES}")
        if self.classifier not in CLASSIFIERS:
            problems.append(f"classifier must be one of {CLASSIFIERS}")
        if self.k < 1:
            problems.append("k must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            problems.append("seed must be an unsigned 64-bit integer")
        if self.size[0] < 1 or self.size[1] < 1:
            problems.append("size must be at least 1x1")
        if self.train_per_class < 1:
            problems.append("train_per_class must be >= 1")
        if self.train_ratio is not None and not 0.0 < self.train_ratio < 1.0:
            problems.append("train_ratio must lie in (0, 1)")
        if self.m is not None and self.m < 1:
            problems.append("m must be >= 1")
        if self.epsilon is not None and not self.epsilon > 0:
            problems.append("epsilon must be > 0")
        if self.top < 1:
            problems.append("top must be >= 1")
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))
        return self

    def for_model(self, model: AnyModel) -> "RunConfig":
        """The configuration a trained model was built with, over this one."""
        settings = model.settings
        if isinstance(model, BaselineModel):
            fitted = next(iter(model.channel_models.values()))
            classifier, m, epsilon = model.kind, int(fitted.components.shape[0]), None
        else:
            classifier, m, epsilon = MAP, None, model.epsilon_override
        return replace(
            self,
            classifier=classifier,
            size=tuple(settings.size),
            color_mode=settings.color_mode,
            k=settings.k,
            selection_mode=settings.selection_mode,
            equalize_chroma=settings.equalize_chroma,
            m=m,
            epsilon=epsilon,
        )

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Replace every field whose override is not None."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def to_text(self) -> str:
        lines = [f"{f.name} = {_format_value(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        values: Dict[str, Any] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, value)
        return cls(**values).validate()


def parse_size(text: str) -> Tuple[int, int]:
    try:
        width, height = (int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"size must look like WxH, got {text!r}") from exc
    return width, height


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return f"{value[0]}x{value[1]}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


_INT_KEYS = {"train_per_class", "seed", "k", "m", "top"}
_FLOAT_KEYS = {"train_ratio", "epsilon"}


def _parse_value(key: str, value: str) -> Any:
    if value.lower() == "none":
        return None
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc
    if key == "size":
        return parse_size(value)
    if key == "equalize_chroma":
        if value.lower() not in ("true", "false"):
            raise ConfigError(f"equalize_chroma must be true or false, got {value!r}")
        return value.lower() == "true"
    return value


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}", module="cli") from exc
    return RunConfig.from_text(text)


def save_config(config: RunConfig, path: Union[str, Path]) -> Path:
    return atomic_write(path, config.to_text(), module="cli")
