import io

import numpy as np
import pytest
from PIL import Image

from absnet.corpus.images import array_to_image, image_to_png_bytes, preprocess_image
from absnet.errors import UndecodableImage


def _png_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(array).save(buf, format="PNG")
    return buf.getvalue()


def test_all_black_maps_to_minus_one():
    raw = _png_bytes(np.zeros((32, 32, 3), dtype=np.uint8))
    image = preprocess_image(raw, size=32)
    assert np.all(image.pixels == -1.0)


def test_all_white_maps_to_plus_one():
    raw = _png_bytes(np.full((32, 32, 3), 255, dtype=np.uint8))
    image = preprocess_image(raw, size=32)
    assert np.all(image.pixels == 1.0)


def test_resize_to_configured_square():
    raw = _png_bytes(np.random.default_rng(0).integers(0, 256, (600, 600, 3), dtype=np.uint8))
    image = preprocess_image(raw, size=300)
    assert image.pixels.shape == (300, 300, 3)


def test_values_always_within_range():
    rng = np.random.default_rng(1)
    raw = _png_bytes(rng.integers(0, 256, (41, 67, 3), dtype=np.uint8))
    image = preprocess_image(raw, size=24)
    assert image.pixels.min() >= -1.0
    assert image.pixels.max() <= 1.0


def test_png_round_trip_is_nearly_idempotent():
    """Re-encoding at the same size moves no pixel more than one 8-bit step."""
    rng = np.random.default_rng(2)
    raw = _png_bytes(rng.integers(0, 256, (48, 48, 3), dtype=np.uint8))
    first = preprocess_image(raw, size=48)
    second = preprocess_image(image_to_png_bytes(first), size=48)
    assert np.abs(first.pixels - second.pixels).max() <= 2.0 / 255.0


def test_undecodable_bytes_raise():
    with pytest.raises(UndecodableImage):
        preprocess_image(b"this is not an image", size=32)


def test_truncated_png_raises():
    raw = _png_bytes(np.zeros((16, 16, 3), dtype=np.uint8))
    with pytest.raises(UndecodableImage):
        preprocess_image(raw[:20], size=16)


def test_array_to_image_quantization():
    arr = np.array([[[-1.0, 0.0, 1.0]]], dtype=np.float32)
    out = np.asarray(array_to_image(arr))
    assert out.tolist() == [[[0, 128, 255]]]
