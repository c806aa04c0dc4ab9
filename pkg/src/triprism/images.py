"""Windowing, perturbations, and synthetic texture generation.

All operations are pure functions of their inputs: randomness is driven
entirely by explicit seeds, and every function returns a fresh array, so
results are safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import MAX_INTENSITY, check_gray_image

DEFAULT_NOISE_SIGMA = 25.5  # 10% of the 0..255 dynamic range


def split_windows(img, win: int) -> list[np.ndarray]:
    """Split an image into non-overlapping ``win`` x ``win`` tiles.

    Tiles are taken in row-major order starting at the top-left corner;
    partial tiles at the right and bottom margins are discarded.  A window
    larger than the image yields an empty list.
    """
    img = check_gray_image(img)
    if win < 2:
        raise ValueError(f"window side must be >= 2, got {win}")
    h, w = img.shape
    out = []
    for bi in range(h // win):
        for bj in range(w // win):
            out.append(img[bi * win : (bi + 1) * win, bj * win : (bj + 1) * win].copy())
    return out


def add_gaussian_noise(
    img, noise_ratio: float, noise_sigma: float = DEFAULT_NOISE_SIGMA, seed: int = 0
) -> np.ndarray:
    """Add zero-mean Gaussian noise to a random subset of pixels.

    Exactly ``round(noise_ratio * n_pixels)`` distinct pixels, chosen
    uniformly without replacement from the given seed, receive an
    independent N(0, noise_sigma^2) offset; the result is clamped to
    [0, 255].  All other pixels are returned unchanged.
    """
    img = check_gray_image(img)
    if not 0.0 <= noise_ratio <= 1.0:
        raise ValueError(f"noise_ratio must lie in [0, 1], got {noise_ratio}")
    if noise_sigma <= 0.0:
        raise ValueError(f"noise_sigma must be positive, got {noise_sigma}")
    out = img.copy()
    count = int(round(noise_ratio * img.size))
    if count == 0:
        return out
    rng = np.random.default_rng(seed)
    flat = out.ravel()
    chosen = rng.choice(img.size, size=count, replace=False)
    flat[chosen] = np.clip(flat[chosen] + rng.normal(0.0, noise_sigma, size=count), 0.0, MAX_INTENSITY)
    return out


def _rotate_bilinear(img: np.ndarray, angle_degrees: float) -> np.ndarray:
    """Rotate about the array center by inverse mapping + bilinear sampling.

    Positive angles rotate the displayed content counterclockwise,
    matching ``np.rot90``.  Samples falling outside the source are 0,
    which only affects pixels outside the inscribed circle.
    """
    d = img.shape[0]
    ctr = (d - 1) / 2.0
    phi = -math.radians(angle_degrees)
    cos_p, sin_p = math.cos(phi), math.sin(phi)
    rr, cc = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    u = rr - ctr
    v = cc - ctr
    src_r = cos_p * u - sin_p * v + ctr
    src_c = sin_p * u + cos_p * v + ctr

    r0 = np.floor(src_r).astype(np.int64)
    c0 = np.floor(src_c).astype(np.int64)
    fr = src_r - r0
    fc = src_c - c0
    out = np.zeros((d, d), dtype=np.float64)
    for dr, dc, weight in (
        (0, 0, (1 - fr) * (1 - fc)),
        (0, 1, (1 - fr) * fc),
        (1, 0, fr * (1 - fc)),
        (1, 1, fr * fc),
    ):
        ri = r0 + dr
        ci = c0 + dc
        inside = (ri >= 0) & (ri < d) & (ci >= 0) & (ci < d)
        out[inside] += weight[inside] * img[ri[inside], ci[inside]]
    return out


def rotate_and_crop(img, angle_degrees: float) -> np.ndarray:
    """Rotate a square image about its center, then take the central crop.

    The crop has side ``floor(d / sqrt(2))`` for a ``d x d`` input, the
    largest axis-aligned square guaranteed to contain only real (not
    padded) pixels for any rotation angle.  Multiples of 90 degrees use
    exact index permutation instead of interpolation, so those rotations
    are lossless.
    """
    img = check_gray_image(img)
    h, w = img.shape
    if h != w:
        raise ValueError(f"rotation requires a square image, got {h}x{w}")
    angle = angle_degrees % 360.0
    if angle % 90.0 == 0.0:
        rotated = np.rot90(img, k=int(angle // 90.0))
    else:
        rotated = _rotate_bilinear(img, angle)
    side = math.floor(h / math.sqrt(2.0))
    lo = (h - side) // 2
    return rotated[lo : lo + side, lo : lo + side].copy()


def synth_fbm(hurst: float, size: int, seed: int = 0) -> np.ndarray:
    """Synthesize a fractional Brownian surface by spectral synthesis.

    A complex Gaussian spectrum is shaped so the power at radial
    frequency f follows ``f ** -(2 * hurst + 2)``, the density of a 2-D
    surface with Hurst exponent ``hurst`` (amplitude ``f ** -(hurst + 1)``).
    Two refinements keep the sampled field faithful to that scaling law:

    * the field is synthesized on a power-of-two grid at least twice the
      requested size and cropped, so the FFT's periodicity cannot alias
      large-lag increments back onto small lags;
    * power from the first ring of spectral aliases is folded in, which
      restores the above-Nyquist roughness a sampled continuous process
      would carry.

    The crop is affinely rescaled to span exactly [0, 255].  Output is
    deterministic for a fixed seed.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst exponent must lie in (0, 1), got {hurst}")
    pow2_plus_one = size >= 2 and ((size - 1) & (size - 2)) == 0
    if size < 32 and not pow2_plus_one:
        # below 32, only power-of-two-plus-one sizes tile the prism grid exactly
        raise ValueError(f"size must be >= 32 or a power of two plus one, got {size}")

    n = 1
    while n < 2 * size:
        n *= 2
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.fftfreq(n)[None, :]
    beta = 2.0 * hurst + 2.0
    power = np.zeros((n, n))
    for ky in (-1, 0, 1):
        for kx in (-1, 0, 1):
            f_sq = (fy + ky) ** 2 + (fx + kx) ** 2
            if ky == 0 and kx == 0:
                f_sq[0, 0] = np.inf  # suppress the DC bin; the mean carries no texture
            power += f_sq ** (-beta / 2.0)
    spectrum = np.sqrt(power) * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    field = np.fft.ifft2(spectrum).real[:size, :size]
    lo = field.min()
    hi = field.max()
    return (field - lo) / (hi - lo) * MAX_INTENSITY


GAUSSIAN_NOISE = "gaussian_noise"
ROTATION = "rotation"


@dataclass(frozen=True)
class Perturbation:
    """A reproducible image perturbation: seeded Gaussian noise or rotation.

    ``kind`` selects the operation; the unrelated parameters are ignored.
    ``seed`` only matters for noise.
    """

    kind: str
    noise_ratio: float = 0.0
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    angle_degrees: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_NOISE, ROTATION):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == GAUSSIAN_NOISE:
            if not 0.0 <= self.noise_ratio <= 1.0:
                raise ValueError(f"noise_ratio must lie in [0, 1], got {self.noise_ratio}")
            if self.noise_sigma <= 0.0:
                raise ValueError(f"noise_sigma must be positive, got {self.noise_sigma}")
        else:
            if not 0.0 <= self.angle_degrees < 360.0:
                raise ValueError(f"angle_degrees must lie in [0, 360), got {self.angle_degrees}")

    def apply(self, img) -> np.ndarray:
        if self.kind == GAUSSIAN_NOISE:
            return add_gaussian_noise(img, self.noise_ratio, self.noise_sigma, self.seed)
        return rotate_and_crop(img, self.angle_degrees)
