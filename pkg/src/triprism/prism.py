"""Triangular-prism surface areas, fractal descriptors, and dimension.

The gray-level surface of an image is tessellated, at each cell side
``scale``, into square cells whose four corner intensities plus their mean
(the prism apex) define four triangular faces.  Summing the Heron areas of
those faces over the grid gives the total tessellation area at that scale;
tracking the total across scales yields the fractal dimension, and raising
each cell area to a tunable exponent before summing yields the
exponent-weighted multiscale descriptors.

Geometry of one cell, in array coordinates (row down, column right)::

        top-left ──── top edge ──── top-right
            │  ╲                  ╱   │
        left edge    apex (mean)   right edge
            │  ╱                  ╲   │
     bottom-left ── bottom edge ── bottom-right

Each face is the triangle spanned by one cell edge and the apex; its
sides are the slanted edge length and the two slanted corner-to-apex
"spokes".  Corners and faces are kept in the fixed cyclic order
top-left, bottom-left, bottom-right, top-right throughout.

The grid at side ``scale`` is anchored at the top-left pixel with anchors
every ``scale`` pixels; only cells whose far corners are inside the image
are used, so margins that do not fit a full cell are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import check_gray_image


class ScaleError(ValueError):
    """Raised when a scale schedule does not fit the target image."""


# ---------------------------------------------------------------------------
# Scale schedules
# ---------------------------------------------------------------------------


def _min_side(img_or_shape) -> int:
    if hasattr(img_or_shape, "shape"):
        h, w = img_or_shape.shape
    else:
        h, w = img_or_shape
    return int(min(h, w))


def power_of_two_scales(img_or_shape, max_scale: int | None = None) -> list[int]:
    """Default scale schedule: cell sides 2, 4, 8, ... that fit a full cell.

    A scale fits when a cell anchored at the top-left corner has its far
    corner inside the image, i.e. ``scale <= min(height, width) - 1``.
    """
    m = _min_side(img_or_shape)
    scales = []
    scale = 2
    while scale <= m - 1:
        scales.append(scale)
        scale *= 2
    if max_scale is not None:
        scales = [s for s in scales if s <= max_scale]
    if not scales:
        raise ScaleError(f"no scale >= 2 admits a full cell on a min side of {m}")
    return scales


def linear_scales(img_or_shape, max_scale: int | None = None) -> list[int]:
    """Dense schedule: every integer cell side from 2 up to ``max_scale``.

    Useful when a specific descriptor count per exponent is wanted; the
    power-of-two schedule only offers ``log2``-many scales.
    """
    m = _min_side(img_or_shape)
    top = m - 1 if max_scale is None else min(max_scale, m - 1)
    if top < 2:
        raise ScaleError(f"no scale >= 2 admits a full cell on a min side of {m}")
    return list(range(2, top + 1))


def dimension_scales(img_or_shape, min_cells_per_axis: int = 4) -> list[int]:
    """Power-of-two schedule restricted to statistically meaningful scales.

    Dimension estimates fit a slope to ``log(total area)`` vs
    ``log(scale)``; at scales where only a cell or two fit, the total is
    dominated by the cell geometry rather than the surface scaling, which
    flattens the slope.  Requiring at least ``min_cells_per_axis`` full
    cells per axis keeps the fit inside the scaling regime.
    """
    m = _min_side(img_or_shape)
    scales = [s for s in power_of_two_scales(img_or_shape) if (m - 1) // s >= min_cells_per_axis]
    if not scales:
        raise ScaleError(
            f"no scale admits {min_cells_per_axis} cells per axis on a min side of {m}"
        )
    return scales


def cell_count(img_or_shape, scale: int) -> int:
    """Number of full cells in the grid at the given scale."""
    if hasattr(img_or_shape, "shape"):
        h, w = img_or_shape.shape
    else:
        h, w = img_or_shape
    if scale < 1:
        raise ScaleError(f"scale must be >= 1, got {scale}")
    return ((h - 1) // scale) * ((w - 1) // scale)


# ---------------------------------------------------------------------------
# Cell geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellGeometry:
    """Full geometry of one prism cell, mainly for inspection and testing.

    All quadruples follow the cyclic corner order (top-left, bottom-left,
    bottom-right, top-right); ``edge_lengths[i]`` joins corner ``i`` to
    corner ``(i + 1) % 4``, and ``face_areas[i]`` is the triangle on that
    edge and the apex.
    """

    scale: int
    corner_heights: tuple[float, float, float, float]
    center_height: float
    edge_lengths: tuple[float, float, float, float]
    spoke_lengths: tuple[float, float, float, float]
    semi_perimeters: tuple[float, float, float, float]
    face_areas: tuple[float, float, float, float]

    @property
    def total_area(self) -> float:
        return float(sum(self.face_areas))


def _heron_from_squares(a_sq, b_sq, c_sq):
    """Heron's area from squared side lengths.

    Expanding Heron's formula gives 16 * area^2 = 4 a^2 b^2 -
    (a^2 + b^2 - c^2)^2, which never takes a square root of the sides.
    The squared sides here are plain rational arithmetic on pixel
    heights, so flat cells come out bit-exact (a flat face is exactly
    scale^2 / 4); the radicand is clamped at zero to absorb the ~1e-15
    negative excursions degenerate needle faces produce.
    """
    radicand = 4.0 * a_sq * b_sq - (a_sq + b_sq - c_sq) ** 2
    return 0.25 * np.sqrt(np.maximum(radicand, 0.0))


def _face_areas_from_heights(corners, center, scale):
    """Heron face areas from corner heights (cyclic order) and the apex.

    Works elementwise on arrays; returns the squared edge and spoke
    lengths along with the face areas, each a 4-tuple in cyclic order.
    """
    edge_base_sq = float(scale) ** 2
    spoke_base_sq = edge_base_sq / 2.0  # apex sits (scale / sqrt(2)) from each corner
    edges_sq = tuple(
        (corners[(i + 1) % 4] - corners[i]) ** 2 + edge_base_sq for i in range(4)
    )
    spokes_sq = tuple((corners[i] - center) ** 2 + spoke_base_sq for i in range(4))
    faces = tuple(
        _heron_from_squares(spokes_sq[i], edges_sq[i], spokes_sq[(i + 1) % 4])
        for i in range(4)
    )
    return edges_sq, spokes_sq, faces


def cell_geometry(img, row: int, col: int, scale: int) -> CellGeometry:
    """Compute the full prism geometry of the cell anchored at (row, col)."""
    img = check_gray_image(img)
    h, w = img.shape
    if scale < 1:
        raise ScaleError(f"scale must be >= 1, got {scale}")
    if not (0 <= row and row + scale <= h - 1 and 0 <= col and col + scale <= w - 1):
        raise IndexError(
            f"cell at ({row}, {col}) with scale {scale} exceeds image bounds {h}x{w}"
        )
    corners = (
        float(img[row, col]),
        float(img[row + scale, col]),
        float(img[row + scale, col + scale]),
        float(img[row, col + scale]),
    )
    center = sum(corners) / 4.0
    edges_sq, spokes_sq, faces = _face_areas_from_heights(corners, center, scale)
    edges = tuple(math.sqrt(v) for v in edges_sq)
    spokes = tuple(math.sqrt(v) for v in spokes_sq)
    semis = tuple(
        0.5 * (edges[i] + spokes[i] + spokes[(i + 1) % 4]) for i in range(4)
    )
    return CellGeometry(
        scale=scale,
        corner_heights=corners,
        center_height=center,
        edge_lengths=edges,
        spoke_lengths=spokes,
        semi_perimeters=semis,
        face_areas=tuple(map(float, faces)),
    )


def cell_area(geom: CellGeometry) -> float:
    """Total prism area of one cell: the sum of its four face areas.

    Always at least ``scale ** 2`` (the projected footprint), with
    equality exactly when the four corners share one height.
    """
    return geom.total_area


def face_area_closed_form(h1, h2, h3, h4, scale) -> np.ndarray | float:
    """Closed-form area of the face whose base edge joins heights h1, h2.

    ``h3`` and ``h4`` are the two remaining cell corners.  Algebraically
    identical to the Heron route; kept as an independent cross-check
    oracle and never used in the production area kernel.
    """
    h1 = np.asarray(h1, dtype=np.float64)
    scale_sq = np.asarray(scale, dtype=np.float64) ** 2
    radicand = 4.0 * (h1 - h2) ** 2 + ((h1 + h2) - (h3 + h4)) ** 2 + 4.0 * scale_sq
    return (np.asarray(scale, dtype=np.float64) / 8.0) * np.sqrt(radicand)


# ---------------------------------------------------------------------------
# Area sums and descriptors
# ---------------------------------------------------------------------------


def cell_areas(img, scale: int) -> np.ndarray:
    """Per-cell prism areas over the full-cell grid, as a 2-D array.

    The grid is anchored at the top-left pixel with one cell every
    ``scale`` pixels along each axis; cells whose far corner would fall
    outside the image are excluded.
    """
    img = check_gray_image(img)
    h, w = img.shape
    if scale < 1:
        raise ScaleError(f"scale must be >= 1, got {scale}")
    n_rows = (h - 1) // scale
    n_cols = (w - 1) // scale
    if n_rows < 1 or n_cols < 1:
        raise ScaleError(f"scale {scale} admits no full cell on a {h}x{w} image")
    rows = np.arange(n_rows) * scale
    cols = np.arange(n_cols) * scale
    corners = (
        img[np.ix_(rows, cols)],
        img[np.ix_(rows + scale, cols)],
        img[np.ix_(rows + scale, cols + scale)],
        img[np.ix_(rows, cols + scale)],
    )
    center = (corners[0] + corners[1] + corners[2] + corners[3]) / 4.0
    _, _, faces = _face_areas_from_heights(corners, center, scale)
    return faces[0] + faces[1] + faces[2] + faces[3]


def weighted_area_sum(img, scale: int, exponent: float) -> float:
    """Sum of per-cell areas, each raised to ``exponent``, over the grid.

    ``exponent`` = 1 recovers the plain tessellation area; 0 counts the
    cells.  Larger exponents emphasize rough cells, smaller ones flat
    cells.
    """
    return float(np.sum(cell_areas(img, scale) ** float(exponent)))


def area_curve(img, scales, exponents) -> np.ndarray:
    """Weighted area sums for every (exponent, scale) pair.

    Returns an array of shape ``(len(exponents), len(scales))``;
    ``out[i, j]`` is the sum over cells at ``scales[j]`` of the cell area
    raised to ``exponents[i]``.  Cell areas are computed once per scale.
    """
    img = check_gray_image(img)
    exps = np.asarray(list(exponents), dtype=np.float64)
    if exps.size == 0 or not np.all(np.isfinite(exps)):
        raise ValueError("exponents must be a non-empty list of finite values")
    scales = [int(s) for s in scales]
    out = np.empty((exps.size, len(scales)), dtype=np.float64)
    for j, scale in enumerate(scales):
        areas = cell_areas(img, scale).ravel()
        out[:, j] = np.sum(areas[None, :] ** exps[:, None], axis=1)
    return out


def descriptor_vector(img, scales=None, exponents=(1.0,)) -> np.ndarray:
    """Log-area multiscale descriptor of one image.

    The descriptor is ``log(S)`` of every weighted area sum, flattened in
    exponent-major order: all scales (ascending) for the first exponent,
    then all scales for the next, and so on.  That layout is a stability
    guarantee for feature files.  Natural log throughout.
    """
    img = check_gray_image(img)
    if scales is None:
        scales = power_of_two_scales(img)
    return np.log(area_curve(img, scales, exponents)).ravel()


def descriptor_feature_names(scales, exponents) -> list[str]:
    """Column names matching ``descriptor_vector``'s layout."""
    return [f"lnS_a{float(a):g}_e{int(s)}" for a in exponents for s in scales]


# ---------------------------------------------------------------------------
# Fractal dimension
# ---------------------------------------------------------------------------


def dimension_from_curve(scales, totals) -> float:
    """Fractal dimension from a (scale, total area) curve.

    Ordinary least squares fits ``log(total)`` against ``log(scale)``
    over all points, no weighting or pruning; the dimension is
    ``2 - slope``.
    """
    scales = np.asarray(list(scales), dtype=np.float64)
    totals = np.asarray(list(totals), dtype=np.float64)
    if scales.size < 2:
        raise ScaleError(f"dimension fit needs >= 2 scales, got {scales.size}")
    slope = np.polyfit(np.log(scales), np.log(totals), 1)[0]
    return 2.0 - float(slope)


def fractal_dimension(img, scales=None) -> float:
    """Triangular-prism fractal dimension of an image.

    Uses the unweighted (exponent 1) area at each scale of the given
    schedule, defaulting to the full power-of-two schedule.  Natural
    textures land roughly in (1.5, 3.2); a flat image gives exactly 2.
    """
    img = check_gray_image(img)
    if scales is None:
        scales = power_of_two_scales(img)
    totals = [weighted_area_sum(img, s, 1.0) for s in scales]
    return dimension_from_curve(scales, totals)
