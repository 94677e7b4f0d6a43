"""Deterministic image preprocessing for embedding extraction.

No random augmentation happens here: embeddings are cached by content,
so the same bytes must always produce the same tensor.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..errors import DecodeError

# ImageNet channel statistics, the convention the backbones were trained with.
CHANNEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
CHANNEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def preprocess(image_bytes: bytes, image_size: int = 224) -> np.ndarray:
    """Decode, resize to ``image_size`` square, scale to [0,1], standardize.

    Returns a float32 array of shape (3, image_size, image_size).
    """
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            img = img.convert("RGB").resize((image_size, image_size), Image.BILINEAR)
            pixels = np.asarray(img, dtype=np.float32) / 255.0
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    pixels = (pixels - CHANNEL_MEAN) / CHANNEL_STD
    return np.ascontiguousarray(pixels.transpose(2, 0, 1))
