import struct

import numpy as np
import pandas as pd
import pytest

from Scripts.baselines import LDA, PCA, baseline_scores, fit_baseline
from Scripts.classify import add_class, probe_scores, train
from Scripts.errors import ChecksumMismatch, ModelFormatError, VersionMismatch
from Scripts.model_file import FORMAT_VERSION, export_text, load_model, model_from_bytes, model_to_bytes, save_model
from Scripts.pipeline import FeatureSettings
from Scripts.preprocess import YCBCR


def _ycbcr_features(rng, n_classes=4, k=5):
    channels = ("Y", "Cb", "Cr")
    return {
        f"person{i}": {ch: rng.normal(rng.normal(0.0, 3.0, k), 1.0, (4, k)) for ch in channels}
        for i in range(n_classes)
    }


def test_map_model_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(28)
    settings = FeatureSettings(size=(16, 16), color_mode=YCBCR, k=5)
    model = train(_ycbcr_features(rng), settings)
    path = save_model(model, tmp_path / "model.mapf")
    loaded = load_model(path)

    assert loaded.labels == model.labels
    assert loaded.settings == model.settings
    for ch in model.channels:
        np.testing.assert_array_equal(loaded.pooled[ch], model.pooled[ch])
        np.testing.assert_array_equal(loaded.mean_matrix(ch), model.mean_matrix(ch))
    for _ in range(20):
        probe = {ch: rng.normal(0.0, 3.0, 5) for ch in model.channels}
        np.testing.assert_array_equal(probe_scores(loaded, probe), probe_scores(model, probe))


def test_loaded_model_still_accepts_new_classes(tmp_path):
    rng = np.random.default_rng(29)
    settings = FeatureSettings(color_mode=YCBCR, k=5)
    features = _ycbcr_features(rng, n_classes=5)
    newcomer = features.pop("person4")

    saved = save_model(train(features, settings), tmp_path / "model.mapf")
    grown = add_class(load_model(saved), "person4", newcomer)
    batch = train({**features, "person4": newcomer}, settings)
    for ch in batch.channels:
        np.testing.assert_allclose(grown.pooled[ch], batch.pooled[ch], rtol=1e-12)


def test_truncated_file_fails_checksum():
    rng = np.random.default_rng(30)
    data = model_to_bytes(train(_ycbcr_features(rng), FeatureSettings(color_mode=YCBCR, k=5)))
    with pytest.raises(ChecksumMismatch):
        model_from_bytes(data[:-20])

    flipped = bytearray(data)
    flipped[40] ^= 0xFF
    with pytest.raises(ChecksumMismatch):
        model_from_bytes(bytes(flipped))


def test_other_version_is_rejected():
    rng = np.random.default_rng(31)
    data = bytearray(model_to_bytes(train(_ycbcr_features(rng), FeatureSettings(color_mode=YCBCR, k=5))))
    data[4:6] = struct.pack("<H", FORMAT_VERSION + 1)
    with pytest.raises(VersionMismatch):
        model_from_bytes(bytes(data))


def test_bad_magic():
    with pytest.raises(ModelFormatError):
        model_from_bytes(b"JPEG-ish bytes")


@pytest.mark.parametrize("length", [0, 3, 5, 6, 13])
def test_short_file_is_truncated(length):
    rng = np.random.default_rng(33)
    data = model_to_bytes(train(_ycbcr_features(rng), FeatureSettings(color_mode=YCBCR, k=5)))
    with pytest.raises(ChecksumMismatch):
        model_from_bytes(data[:length])


@pytest.mark.parametrize("kind", [PCA, LDA])
def test_baseline_round_trip(tmp_path, kind):
    rng = np.random.default_rng(32)
    settings = FeatureSettings(color_mode=YCBCR, k=5)
    model = fit_baseline(kind, _ycbcr_features(rng), settings, m=3)
    loaded = load_model(save_model(model, tmp_path / f"{kind}.mapf"))

    assert loaded.kind == kind
    assert loaded.labels == model.labels
    probe = {ch: rng.normal(0.0, 3.0, 5) for ch in settings.channels}
    np.testing.assert_array_equal(baseline_scores(loaded, probe), baseline_scores(model, probe))


def test_export_text(tmp_path):
    rng = np.random.default_rng(33)
    model = train(_ycbcr_features(rng, n_classes=2), FeatureSettings(color_mode=YCBCR, k=5))
    path = export_text(model, tmp_path / "model.tsv")
    table = pd.read_csv(path, sep="\t")
    assert len(table) == 6
    assert list(table.columns[:3]) == ["label", "count", "channel"]
    assert table["mu_4"].notna().all()
