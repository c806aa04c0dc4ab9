"""Input validation helpers shared across the package.

Images are plain 2-D ``float64`` numpy arrays of shape ``(height, width)``
holding intensities in ``[0, 255]``; feature matrices are 2-D ``float64``
arrays with one sample per row.  The helpers below normalise inputs to
those conventions and fail fast on anything else.
"""

from __future__ import annotations

import numpy as np

MIN_INTENSITY = 0.0
MAX_INTENSITY = 255.0


def check_gray_image(img, min_side: int = 2) -> np.ndarray:
    """Validate and return a grayscale image as a C-contiguous float64 array.

    Parameters
    ----------
    img : array-like
        2-D array of intensities in ``[0, 255]``.
    min_side : int
        Minimum allowed height and width.  A prism cell needs two corners
        per axis, hence the default of 2.

    Returns
    -------
    np.ndarray
        The validated image, converted to float64 (copied only if needed).
    """
    arr = np.ascontiguousarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got {arr.ndim}-D input")
    h, w = arr.shape
    if h < min_side or w < min_side:
        raise ValueError(f"image must be at least {min_side}x{min_side}, got {h}x{w}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite intensities")
    if arr.min() < MIN_INTENSITY or arr.max() > MAX_INTENSITY:
        raise ValueError(
            f"intensities must lie in [{MIN_INTENSITY:g}, {MAX_INTENSITY:g}], "
            f"got range [{arr.min():g}, {arr.max():g}]"
        )
    return arr


def check_feature_matrix(X, min_rows: int = 1) -> np.ndarray:
    """Validate and return a feature matrix as a 2-D float64 array."""
    arr = np.ascontiguousarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got {arr.ndim}-D input")
    if arr.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} samples, got {arr.shape[0]}")
    if arr.shape[1] < 1:
        raise ValueError("feature matrix has no columns")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature matrix contains non-finite entries")
    return arr


def check_labels(y, n_samples: int) -> np.ndarray:
    """Validate a label vector against the expected sample count."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got {arr.ndim}-D input")
    if arr.shape[0] != n_samples:
        raise ValueError(f"got {arr.shape[0]} labels for {n_samples} samples")
    return arr
