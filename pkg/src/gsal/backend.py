"""Numerical backends for the pixel-loop primitives.

The hot paths -- direct 2D convolution with replicate padding, bilinear
resampling, and foveal pyramid blending -- exist twice: a numba JIT
implementation and a pure-numpy one. ``GSAL_BACKEND=numba`` or
``GSAL_BACKEND=numpy`` forces a path; by default numba is used when it
imports and numpy otherwise. ``set_backend`` switches at runtime (the
benchmark uses this to time both paths in one process).
"""

import math
import os

import numpy as np

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via GSAL_BACKEND=numpy
    HAS_NUMBA = False

BACKENDS = ("numba", "numpy")


def _default_backend():
    name = os.environ.get("GSAL_BACKEND", "").strip().lower()
    if name:
        if name not in BACKENDS:
            raise ValueError(
                f"GSAL_BACKEND={name!r} not recognized; expected one of {BACKENDS}"
            )
        if name == "numba" and not HAS_NUMBA:
            raise RuntimeError("GSAL_BACKEND=numba but numba is not importable")
        return name
    return "numba" if HAS_NUMBA else "numpy"


_ACTIVE = _default_backend()


def active_backend():
    """Name of the backend currently answering calls ('numba' or 'numpy')."""
    return _ACTIVE


def set_backend(name):
    """Switch backends at runtime; returns the previously active name."""
    global _ACTIVE
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    previous = _ACTIVE
    _ACTIVE = name
    return previous


def _pad_replicate(image, rh, rw):
    return np.pad(image, ((rh, rh), (rw, rw)), mode="edge")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _conv2d_numpy(image, kernel, stride):
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    h, w = image.shape
    padded = _pad_replicate(image, rh, rw)
    out = np.zeros((h, w), dtype=np.float64)
    for a in range(kh):
        row = kernel[a]
        for b in range(kw):
            kv = row[b]
            if kv != 0.0:
                out += kv * padded[a : a + h, b : b + w]
    if stride > 1:
        out = np.ascontiguousarray(out[::stride, ::stride])
    return out


def _resize_coords(n_in, n_out):
    # half-pixel-center mapping, clamped to the source extent
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def _bilinear_resize_numpy(image, out_h, out_w):
    h, w = image.shape
    y0, y1, fy = _resize_coords(h, out_h)
    x0, x1, fx = _resize_coords(w, out_w)
    fy = fy[:, None]
    fx = fx[None, :]
    top = image[y0][:, x0] * (1.0 - fx) + image[y0][:, x1] * fx
    bot = image[y1][:, x0] * (1.0 - fx) + image[y1][:, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _foveal_blend_numpy(levels, fy, fx, resolution, level_sigma, snap):
    n_levels, h, w = levels.shape
    yy, xx = np.mgrid[0:h, 0:w]
    ecc = np.sqrt((yy - fy) ** 2 + (xx - fx) ** 2)
    z = ecc / resolution
    exponents = np.empty((n_levels, h, w), dtype=np.float64)
    for lev in range(n_levels):
        exponents[lev] = -((z - lev) ** 2) / (2.0 * level_sigma * level_sigma)
    # shift by the per-pixel max so deep-periphery weights never all underflow
    weights = np.exp(exponents - exponents.max(axis=0))
    total = weights.sum(axis=0)
    out = np.einsum("lij,lij->ij", weights, levels) / total
    exact = (weights[0] / total) > snap
    out[exact] = levels[0][exact]
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _conv2d_numba_core(padded, kernel, out_h, out_w, stride):
        kh, kw = kernel.shape
        out = np.empty((out_h, out_w), dtype=np.float64)
        for i in prange(out_h):
            si = i * stride
            for j in range(out_w):
                sj = j * stride
                acc = 0.0
                for a in range(kh):
                    for b in range(kw):
                        acc += kernel[a, b] * padded[si + a, sj + b]
                out[i, j] = acc
        return out

    @njit(cache=True, parallel=True)
    def _bilinear_resize_numba_core(image, out_h, out_w):
        h, w = image.shape
        out = np.empty((out_h, out_w), dtype=np.float64)
        sy = h / out_h
        sx = w / out_w
        for i in prange(out_h):
            fy = (i + 0.5) * sy - 0.5
            if fy < 0.0:
                fy = 0.0
            if fy > h - 1.0:
                fy = h - 1.0
            y0 = int(math.floor(fy))
            y1 = min(y0 + 1, h - 1)
            dy = fy - y0
            for j in range(out_w):
                fx = (j + 0.5) * sx - 0.5
                if fx < 0.0:
                    fx = 0.0
                if fx > w - 1.0:
                    fx = w - 1.0
                x0 = int(math.floor(fx))
                x1 = min(x0 + 1, w - 1)
                dx = fx - x0
                top = image[y0, x0] * (1.0 - dx) + image[y0, x1] * dx
                bot = image[y1, x0] * (1.0 - dx) + image[y1, x1] * dx
                out[i, j] = top * (1.0 - dy) + bot * dy
        return out

    @njit(cache=True, parallel=True)
    def _foveal_blend_numba_core(levels, fy, fx, resolution, level_sigma, snap):
        n_levels, h, w = levels.shape
        out = np.empty((h, w), dtype=np.float64)
        inv = 1.0 / (2.0 * level_sigma * level_sigma)
        for i in prange(h):
            for j in range(w):
                z = math.sqrt((i - fy) ** 2 + (j - fx) ** 2) / resolution
                # shift exponents by the per-pixel max (the level nearest
                # z) so deep-periphery weights never all underflow
                peak = 0.0
                for lev in range(n_levels):
                    d = z - lev
                    e = -d * d * inv
                    if e > peak or lev == 0:
                        peak = e
                total = 0.0
                w0 = 0.0
                for lev in range(n_levels):
                    d = z - lev
                    wl = math.exp(-d * d * inv - peak)
                    total += wl
                    if lev == 0:
                        w0 = wl
                if w0 / total > snap:
                    out[i, j] = levels[0, i, j]
                else:
                    acc = 0.0
                    for lev in range(n_levels):
                        d = z - lev
                        acc += math.exp(-d * d * inv - peak) * levels[lev, i, j]
                    out[i, j] = acc / total
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def conv2d(image, kernel, stride=1):
    """Direct 2D correlation with replicate padding.

    Output samples sit at input positions (i*stride, j*stride), so the
    result has shape (ceil(h/stride), ceil(w/stride)); stride 1 preserves
    the input shape. All stack kernels are radially symmetric, so
    correlation and convolution coincide.
    """
    image = np.ascontiguousarray(image, dtype=np.float64)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("conv2d expects a non-empty 2D image")
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError("conv2d expects an odd-sided 2D kernel")
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    if _ACTIVE == "numba":
        kh, kw = kernel.shape
        padded = _pad_replicate(image, kh // 2, kw // 2)
        out_h = -(-image.shape[0] // stride)
        out_w = -(-image.shape[1] // stride)
        return _conv2d_numba_core(padded, kernel, out_h, out_w, stride)
    return _conv2d_numpy(image, kernel, stride)


def bilinear_resize(image, out_h, out_w):
    """Resample a 2D array to (out_h, out_w) with bilinear interpolation."""
    image = np.ascontiguousarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("bilinear_resize expects a non-empty 2D image")
    out_h, out_w = int(out_h), int(out_w)
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")
    if (out_h, out_w) == image.shape:
        return image.copy()
    if _ACTIVE == "numba":
        return _bilinear_resize_numba_core(image, out_h, out_w)
    return _bilinear_resize_numpy(image, out_h, out_w)


def foveal_blend(levels, fixation_xy, resolution, level_sigma, snap=0.999):
    """Blend pyramid levels per-pixel with eccentricity-dependent weights.

    ``levels`` is (n_levels, h, w) with level 0 the sharp source; where the
    normalized level-0 weight exceeds ``snap`` the source pixel is copied
    unchanged, which makes the fovea bit-exact.
    """
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    if levels.ndim != 3 or levels.shape[0] < 1:
        raise ValueError("foveal_blend expects a (n_levels, h, w) array")
    fx, fy = float(fixation_xy[0]), float(fixation_xy[1])
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if level_sigma <= 0:
        raise ValueError("level_sigma must be positive")
    if _ACTIVE == "numba":
        return _foveal_blend_numba_core(
            levels, fy, fx, float(resolution), float(level_sigma), float(snap)
        )
    return _foveal_blend_numpy(
        levels, fy, fx, float(resolution), float(level_sigma), float(snap)
    )
