"""Reading and writing of grayscale images.

Supported inputs are PGM (P2 ASCII and P5 binary, 8-bit) and PNG (8-bit
grayscale or 8-bit RGB).  Color pixels are reduced with the ITU-R BT.601
luma weights, kept in floating point so no information is lost before the
descriptor stage.  Output images are always written as binary P5 PGM with
maxval 255.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .validation import check_gray_image

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Raised when a file is readable but not a supported image format."""


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) RGB array to float64 luma intensities."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB array, got shape {rgb.shape}")
    r, g, b = LUMA_WEIGHTS
    return r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    pos = 0
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        else:
            end = pos
            while end < n and not data[end : end + 1].isspace():
                end += 1
            yield pos, data[pos:end]
            pos = end


def read_pgm(path) -> np.ndarray:
    """Decode a P2 or P5 PGM file into a float64 image array."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a P2/P5 PGM file")
    tokens = _pgm_tokens(data[2:])
    try:
        fields = [next(tokens) for _ in range(3)]
    except StopIteration:
        raise ImageFormatError(f"{path}: truncated PGM header") from None
    try:
        width, height, maxval = (int(tok) for _, tok in fields)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: bad PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: unsupported PGM maxval {maxval} (8-bit only)")

    if magic == b"P5":
        # Binary rasters start after exactly one whitespace byte past the maxval.
        offset = 2 + fields[2][0] + len(fields[2][1]) + 1
        raster = data[offset : offset + width * height]
        if len(raster) < width * height:
            raise ImageFormatError(f"{path}: truncated P5 raster")
        pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    else:
        values = []
        for _, tok in tokens:
            try:
                values.append(int(tok))
            except ValueError:
                raise ImageFormatError(f"{path}: non-numeric P2 sample {tok!r}") from None
        if len(values) < width * height:
            raise ImageFormatError(f"{path}: truncated P2 raster")
        pixels = np.asarray(values[: width * height], dtype=np.float64)
    if pixels.max(initial=0.0) > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")
    return pixels.reshape(height, width)


def read_png(path) -> np.ndarray:
    """Decode an 8-bit grayscale or RGB PNG into a float64 image array."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return np.asarray(im, dtype=np.float64)
            if mode == "RGB":
                return rgb_to_gray(np.asarray(im))
    except UnidentifiedImageError:
        raise ImageFormatError(f"{path}: not a decodable PNG file") from None
    raise ImageFormatError(f"{path}: unsupported PNG mode {mode!r} (need 8-bit L or RGB)")


def load_image(path) -> np.ndarray:
    """Load a PGM or PNG file, dispatching on the file's magic bytes.

    Raises
    ------
    OSError
        If the file cannot be read.
    ImageFormatError
        If the contents are not a supported PGM/PNG variant.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic[:2] in (b"P2", b"P5"):
        img = read_pgm(path)
    elif magic[:8] == b"\x89PNG\r\n\x1a\n":
        img = read_png(path)
    else:
        raise ImageFormatError(f"{path}: unrecognized image format")
    return check_gray_image(img)


def write_pgm(path, img) -> None:
    """Write an image as binary P5 PGM, maxval 255.

    Intensities are rounded half-up and clamped to [0, 255] at this
    boundary only; in-memory pipelines stay in floating point.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("write_pgm expects a 2-D image")
    quantized = np.clip(np.floor(img + 0.5), 0.0, 255.0).astype(np.uint8)
    h, w = quantized.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(quantized.tobytes())
    os.replace(tmp, path)
