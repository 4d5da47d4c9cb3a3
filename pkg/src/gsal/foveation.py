"""Space-variant acuity: blend a blur pyramid around a fixation point.

`build_pyramid` produces progressively blurred copies of the source
(blur-then-halve, then upsampled back to source resolution); `foveate`
mixes them per pixel with Gaussian weights over pyramid levels, centered
on eccentricity/resolution. Inside the fovea the level-0 weight dominates
and the source pixels are copied exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from gsal import backend


@dataclass
class FoveationParams:
    """Fovea size and falloff of the acuity simulation.

    resolution is the eccentricity (px) corresponding to one pyramid-level
    step: larger values mean a larger fovea and a gentler falloff. levels
    is the pyramid depth (2..8); blur_kernel_side the binomial filter side
    used between levels (odd, >= 3); level_sigma the width (in level
    units) of the per-pixel blending weights.
    """

    resolution: float
    levels: int = 6
    blur_kernel_side: int = 3
    level_sigma: float = 0.2

    def __post_init__(self):
        if not math.isfinite(self.resolution) or self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")
        if not 2 <= self.levels <= 8:
            raise ValueError(f"levels must be in [2, 8], got {self.levels}")
        if self.blur_kernel_side < 3 or self.blur_kernel_side % 2 == 0:
            raise ValueError(
                f"blur_kernel_side must be odd and >= 3, got {self.blur_kernel_side}"
            )
        if self.level_sigma <= 0:
            raise ValueError("level_sigma must be positive")


#: normalized level-0 weight above which the source pixel is copied exactly
SNAP_THRESHOLD = 0.999


@dataclass
class FoveatedImage:
    """Result of foveation: blended pixels plus the query point."""

    pixels: np.ndarray
    fixation: tuple
    params: FoveationParams


def binomial_kernel(side):
    """Normalized 2D binomial (approximate Gaussian) filter of odd side."""
    row = np.array([math.comb(side - 1, i) for i in range(side)], dtype=np.float64)
    kernel = np.outer(row, row)
    return kernel / kernel.sum()


def _as_float_planes(image):
    arr = np.asarray(image)
    if arr.size == 0:
        raise ValueError("cannot foveate an empty image")
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64)
    if arr.ndim == 2:
        return arr[..., None], True
    if arr.ndim == 3:
        return arr, False
    raise ValueError(f"expected a 2D or 3D image, got shape {arr.shape}")


def build_pyramid(image, params):
    """Blur-then-halve pyramid, each level upsampled back to source size.

    Level 0 is the source itself; level i is level i-1 filtered with the
    binomial kernel and subsampled by two (ceil division on odd sides).
    The image must measure at least 2**levels on each side.
    """
    planes, flat = _as_float_planes(image)
    h, w = planes.shape[:2]
    if min(h, w) < 2**params.levels:
        raise ValueError(
            f"image {h}x{w} too small for a {params.levels}-level pyramid; "
            f"need at least {2 ** params.levels} px per side"
        )
    per_channel = [_channel_pyramid(planes[..., c], params) for c in range(planes.shape[2])]
    out = []
    for lev in range(params.levels):
        frame = np.stack([pc[lev] for pc in per_channel], axis=-1)
        out.append(frame[..., 0] if flat else frame)
    return out


def _channel_pyramid(plane, params):
    blur = binomial_kernel(params.blur_kernel_side)
    h, w = plane.shape
    levels = [plane]
    native = plane
    for _ in range(params.levels - 1):
        native = backend.conv2d(native, blur)[::2, ::2]
        levels.append(backend.bilinear_resize(native, h, w))
    return np.stack(levels)


def blend_weights(shape, fixation_xy, params):
    """Per-pixel pyramid-level weights, shaped (levels, h, w).

    Weights follow exp(-(e/resolution - i)**2 / (2*level_sigma**2)) over
    level index i, normalized per pixel; where the normalized level-0
    weight exceeds SNAP_THRESHOLD the pixel's weights collapse to one-hot
    on level 0 (the exact-fovea region). Rows always sum to 1.
    """
    h, w = shape
    fx, fy = float(fixation_xy[0]), float(fixation_xy[1])
    yy, xx = np.mgrid[0:h, 0:w]
    z = np.sqrt((yy - fy) ** 2 + (xx - fx) ** 2) / params.resolution
    exponents = np.stack(
        [
            -((z - lev) ** 2) / (2.0 * params.level_sigma**2)
            for lev in range(params.levels)
        ]
    )
    # shift by the per-pixel max so deep-periphery weights cannot all
    # underflow to zero
    weights = np.exp(exponents - exponents.max(axis=0))
    weights /= weights.sum(axis=0)
    exact = weights[0] > SNAP_THRESHOLD
    weights[:, exact] = 0.0
    weights[0, exact] = 1.0
    return weights


def foveate(image, fixation_xy, params):
    """Simulate fixating ``image`` at (x, y).

    Output pixels equal the source exactly inside the fovea (roughly
    0.22 * resolution px for the default level_sigma) and blend toward
    deeper pyramid levels with eccentricity. Accepts 2D or 3D arrays,
    uint8 or float; returns float64 pixels in the source range.
    """
    planes, flat = _as_float_planes(image)
    h, w = planes.shape[:2]
    fx, fy = float(fixation_xy[0]), float(fixation_xy[1])
    if not (0 <= fx <= w - 1 and 0 <= fy <= h - 1):
        raise ValueError(
            f"fixation ({fx}, {fy}) outside a {w}x{h} image"
        )
    if min(h, w) < 2**params.levels:
        raise ValueError(
            f"image {h}x{w} too small for a {params.levels}-level pyramid; "
            f"need at least {2 ** params.levels} px per side"
        )
    blended = []
    for c in range(planes.shape[2]):
        levels = _channel_pyramid(planes[..., c], params)
        blended.append(
            backend.foveal_blend(
                levels,
                (fx, fy),
                params.resolution,
                params.level_sigma,
                snap=SNAP_THRESHOLD,
            )
        )
    pixels = blended[0] if flat else np.stack(blended, axis=-1)
    return FoveatedImage(pixels=pixels, fixation=(fx, fy), params=params)
