import numpy as np
import pytest

from Scripts.errors import BadMask, EmptySignal, InvalidK, KTooLarge
from Scripts.features import (
    FIXED_MASK,
    PER_IMAGE_SORT,
    FrequencyMatrix,
    build_fixed_mask,
    dct1d,
    dct_decompose,
    idct1d,
    idct_compose,
    select_features,
)


def _dct2_oracle(plane):
    """Direct double-sum orthonormal 2-D DCT-II."""
    n_rows, n_cols = plane.shape
    out = np.zeros_like(plane)
    rows = np.arange(n_rows)
    cols = np.arange(n_cols)
    for u in range(n_rows):
        alpha_u = np.sqrt((1 if u == 0 else 2) / n_rows)
        cos_u = np.cos(np.pi * (2 * rows + 1) * u / (2 * n_rows))
        for v in range(n_cols):
            alpha_v = np.sqrt((1 if v == 0 else 2) / n_cols)
            cos_v = np.cos(np.pi * (2 * cols + 1) * v / (2 * n_cols))
            out[u, v] = alpha_u * alpha_v * cos_u @ plane @ cos_v
    return out


def test_dct1d_constant_and_impulse():
    np.testing.assert_allclose(dct1d([1.0, 1.0, 1.0, 1.0]), [2.0, 0.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(dct1d([5.0]), [5.0])
    impulse = dct1d([1.0, 0.0])
    np.testing.assert_allclose(impulse, [np.sqrt(0.5), np.sqrt(0.5)])


def test_dct1d_round_trip_and_energy():
    rng = np.random.default_rng(8)
    for n in (1, 2, 7, 64):
        x = rng.normal(size=n)
        coeffs = dct1d(x)
        np.testing.assert_allclose(idct1d(coeffs), x, atol=1e-12)
        assert np.sum(coeffs ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-12)


def test_dct1d_empty_signal():
    with pytest.raises(EmptySignal):
        dct1d([])


def test_dct_decompose_matches_double_sum():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n_rows, n_cols = rng.integers(1, 33, size=2)
        plane = rng.uniform(0, 255, (n_rows, n_cols))
        fast = dct_decompose(plane).coeffs
        slow = _dct2_oracle(plane)
        assert np.linalg.norm(fast - slow) <= 1e-9 * max(np.linalg.norm(slow), 1.0)
        assert np.sum(fast ** 2) == pytest.approx(np.sum(plane ** 2), rel=1e-9)


def test_dct_decompose_full_size_plane():
    rng = np.random.default_rng(10)
    plane = rng.uniform(0, 255, (64, 64))
    fast = dct_decompose(plane).coeffs
    assert np.linalg.norm(fast - _dct2_oracle(plane)) <= 1e-9 * np.linalg.norm(fast)
    np.testing.assert_allclose(idct_compose(FrequencyMatrix(fast)), plane, atol=1e-9)


def test_constant_plane_has_only_dc():
    coeffs = dct_decompose(np.full((4, 4), 10.0)).coeffs
    assert coeffs[0, 0] == pytest.approx(40.0)
    coeffs[0, 0] = 0.0
    np.testing.assert_allclose(coeffs, 0.0, atol=1e-12)


def test_select_features_per_image_sort():
    freq = FrequencyMatrix(np.array([[1.0, -5.0], [3.0, -3.0]]))
    vec = select_features(freq, k=3, mode=PER_IMAGE_SORT)
    # |3| ties: lower flat index first
    np.testing.assert_array_equal(vec.values, [-5.0, 3.0, -3.0])
    assert vec.k == 3


def test_select_features_matches_sorting_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        coeffs = rng.normal(size=(6, 5))
        k = int(rng.integers(1, 31))
        vec = select_features(FrequencyMatrix(coeffs), k=k)
        flat = coeffs.ravel()
        expected = [flat[i] for i in sorted(range(flat.size), key=lambda i: (-abs(flat[i]), i))[:k]]
        np.testing.assert_array_equal(vec.values, expected)


def test_select_features_fixed_mask():
    freq = FrequencyMatrix(np.arange(9, dtype=float).reshape(3, 3))
    vec = select_features(freq, k=3, mode=FIXED_MASK, mask=[8, 0, 4])
    np.testing.assert_array_equal(vec.values, [8.0, 0.0, 4.0])
    np.testing.assert_array_equal(vec.mask, [8, 0, 4])


def test_select_features_bad_inputs():
    freq = FrequencyMatrix(np.ones((2, 2)))
    with pytest.raises(InvalidK):
        select_features(freq, k=0)
    with pytest.raises(KTooLarge):
        select_features(freq, k=5)
    with pytest.raises(BadMask):
        select_features(freq, k=2, mode=FIXED_MASK, mask=[1, 1])
    with pytest.raises(BadMask):
        select_features(freq, k=2, mode=FIXED_MASK, mask=[0, 4])
    with pytest.raises(BadMask):
        select_features(freq, k=2, mode=FIXED_MASK)


def test_build_fixed_mask_finds_shared_frequencies():
    rng = np.random.default_rng(12)
    planes = []
    for _ in range(10):
        coeffs = rng.normal(0.0, 0.01, (8, 8))
        coeffs[0, 0] = 100.0 + rng.normal()
        coeffs[2, 3] = rng.choice([-1.0, 1.0]) * 50.0
        coeffs[5, 1] = 20.0
        planes.append(idct_compose(FrequencyMatrix(coeffs)))

    mask = build_fixed_mask(planes, k=3)
    np.testing.assert_array_equal(mask, [0, 2 * 8 + 3, 5 * 8 + 1])
