import pytest

from Scripts.synthetic import write_dataset


@pytest.fixture
def small_dataset(tmp_path):
    """4 classes x 6 images of 16x16 colored faces, as binary PPM."""
    return write_dataset(tmp_path / "faces", seed=3, n_classes=4, per_class=6, size=16)
