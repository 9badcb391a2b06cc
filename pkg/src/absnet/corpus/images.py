"""Image preprocessing: decode, bilinear resize, and [-1, 1] scaling."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import UndecodableImage
from .types import PreprocessedImage

DEFAULT_IMAGE_SIZE = 300


def preprocess_image(image_bytes: bytes, size: int = DEFAULT_IMAGE_SIZE) -> PreprocessedImage:
    """Decode raster bytes, resize to size x size, scale [0, 255] -> [-1, 1]."""
    if size < 1:
        raise ValueError(f"image size must be positive, got {size}")
    try:
        with Image.open(io.BytesIO(image_bytes)) as im:
            rgb = im.convert("RGB")
    except Exception as exc:
        raise UndecodableImage(f"cannot decode image bytes: {exc}") from exc
    resized = rgb.resize((size, size), Image.BILINEAR)
    arr = np.asarray(resized, dtype=np.float32)
    return PreprocessedImage(pixels=arr / 127.5 - 1.0)


def array_to_image(pixels: np.ndarray) -> Image.Image:
    """Quantize a [-1, 1] float array back to an 8-bit RGB image."""
    arr = np.clip((np.asarray(pixels, dtype=np.float64) + 1.0) * 127.5, 0.0, 255.0)
    return Image.fromarray(np.round(arr).astype(np.uint8), mode="RGB")


def image_to_png_bytes(image: PreprocessedImage) -> bytes:
    buf = io.BytesIO()
    array_to_image(image.pixels).save(buf, format="PNG")
    return buf.getvalue()
