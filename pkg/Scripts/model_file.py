"""
model_file.py

Binary model container shared by the MAP model and the PCA/LDA baselines.

    b"MAPF" | u16 version | u32 header length | header (UTF-8 JSON) |
    little-endian float64 matrices, row-major, in header order | u32 CRC32

The CRC covers everything between the version field and the CRC itself.
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from Scripts.baselines import LDA, PCA, BaselineModel, LdaModel, PcaModel
from Scripts.classify import ClassStatistics, MapModel
from Scripts.errors import ChecksumMismatch, IoFailure, ModelFormatError, VersionMismatch
from Scripts.fileio import atomic_write
from Scripts.pipeline import FeatureSettings

logger = logging.getLogger(__name__)

MAGIC = b"MAPF"
FORMAT_VERSION = 1
MAP = "map"
# magic, version, header length, CRC32
MIN_CONTAINER_BYTES = 4 + 2 + 4 + 4

AnyModel = Union[MapModel, BaselineModel]


def _settings_header(settings: FeatureSettings) -> dict:
    return {
        "size": list(settings.size),
        "color_mode": settings.color_mode,
        "k": settings.k,
        "selection_mode": settings.selection_mode,
        "equalize_chroma": settings.equalize_chroma,
        "masks": None if settings.masks is None else {ch: list(idx) for ch, idx in settings.masks.items()},
    }


def _settings_from_header(header: dict) -> FeatureSettings:
    masks = header["masks"]
    return FeatureSettings(
        size=tuple(header["size"]),
        color_mode=header["color_mode"],
        k=header["k"],
        selection_mode=header["selection_mode"],
        equalize_chroma=header["equalize_chroma"],
        masks=None if masks is None else {ch: tuple(idx) for ch, idx in masks.items()},
    )


def _collect(model: AnyModel) -> Tuple[dict, List[Tuple[str, np.ndarray]]]:
    header = {"settings": _settings_header(model.settings), "channels": list(model.settings.channels)}
    arrays: List[Tuple[str, np.ndarray]] = []

    if isinstance(model, MapModel):
        header.update(
            kind=MAP,
            labels=model.labels,
            counts=[c.count for c in model.classes],
            epsilon_override=model.epsilon_override,
        )
        for channel in model.channels:
            arrays.append((f"{channel}/means", model.mean_matrix(channel)))
            arrays.append((f"{channel}/pooled", model.pooled[channel]))
    else:
        header.update(kind=model.kind, labels=model.labels)
        for channel in model.channels:
            fitted = model.channel_models[channel]
            arrays.append((f"{channel}/components", fitted.components))
            arrays.append((f"{channel}/eigenvalues", fitted.eigenvalues))
            arrays.append((f"{channel}/mean", fitted.mean))
            arrays.append((f"{channel}/class_means_projected", fitted.class_means_projected))
            if isinstance(fitted, LdaModel):
                arrays.append((f"{channel}/s_b", fitted.s_b))
                arrays.append((f"{channel}/s_w", fitted.s_w))
                header.setdefault("lda_epsilon", {})[channel] = fitted.epsilon

    header["c"] = len(header["labels"])
    header["k"] = model.settings.k
    header["arrays"] = [{"name": name, "shape": list(arr.shape)} for name, arr in arrays]
    return header, arrays


def model_to_bytes(model: AnyModel) -> bytes:
    header, arrays = _collect(model)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = struct.pack("<I", len(header_bytes)) + header_bytes
    payload += b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in arrays)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    return MAGIC + struct.pack("<H", FORMAT_VERSION) + payload + struct.pack("<I", crc)


def save_model(model: AnyModel, path: Union[str, Path]) -> Path:
    path = atomic_write(path, model_to_bytes(model), module="classify")
    logger.info("Model saved to %s", path)
    return path


def _read_arrays(header: dict, blob: bytes) -> Dict[str, np.ndarray]:
    arrays = {}
    offset = 0
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if offset + nbytes > len(blob):
            raise ChecksumMismatch("model payload ends before all matrices were read")
        arrays[entry["name"]] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise ModelFormatError(f"{len(blob) - offset} unexpected trailing bytes in model payload")
    return arrays


def model_from_bytes(data: bytes) -> AnyModel:
    if len(data) < MIN_CONTAINER_BYTES:
        raise ChecksumMismatch(f"model file is truncated ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise ModelFormatError("not a model file (bad magic bytes)")
    (version,) = struct.unpack("<H", data[4:6])
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, this build reads version {FORMAT_VERSION}")

    payload, (crc,) = data[6:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise ChecksumMismatch("model file checksum does not match its contents")

    (header_len,) = struct.unpack("<I", payload[:4])
    header = json.loads(payload[4:4 + header_len].decode("utf-8"))
    arrays = _read_arrays(header, payload[4 + header_len:])
    settings = _settings_from_header(header["settings"])
    channels = header["channels"]

    if header["kind"] == MAP:
        classes = [
            ClassStatistics(
                label=label,
                count=count,
                means={ch: arrays[f"{ch}/means"][i].copy() for ch in channels},
            )
            for i, (label, count) in enumerate(zip(header["labels"], header["counts"]))
        ]
        return MapModel(
            classes=classes,
            pooled={ch: arrays[f"{ch}/pooled"] for ch in channels},
            settings=settings,
            epsilon_override=header["epsilon_override"],
        )

    if header["kind"] not in (PCA, LDA):
        raise ModelFormatError(f"unknown model kind: {header['kind']}")

    channel_models = {}
    for ch in channels:
        common = dict(
            components=arrays[f"{ch}/components"],
            eigenvalues=arrays[f"{ch}/eigenvalues"],
            mean=arrays[f"{ch}/mean"],
            class_means_projected=arrays[f"{ch}/class_means_projected"],
        )
        if header["kind"] == LDA:
            channel_models[ch] = LdaModel(
                s_b=arrays[f"{ch}/s_b"], s_w=arrays[f"{ch}/s_w"], epsilon=header["lda_epsilon"][ch], **common
            )
        else:
            channel_models[ch] = PcaModel(**common)
    return BaselineModel(kind=header["kind"], labels=header["labels"], channel_models=channel_models, settings=settings)


def load_model(path: Union[str, Path]) -> AnyModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}", module="classify") from exc
    model = model_from_bytes(data)
    logger.info("Loaded %s model with %d classes from %s", type(model).__name__, len(model.labels), path)
    return model


def export_text(model: MapModel, path: Union[str, Path]) -> Path:
    """Lossy tab-separated dump of class means, for inspection only."""
    rows = []
    for stats in model.classes:
        for channel in model.channels:
            row = {"label": stats.label, "count": stats.count, "channel": channel}
            row.update({f"mu_{j}": v for j, v in enumerate(stats.means[channel])})
            rows.append(row)
    text = pd.DataFrame(rows).to_csv(sep="\t", index=False, float_format="%.6g")
    return atomic_write(path, text, module="classify")
