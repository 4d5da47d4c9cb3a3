"""Bottom-up saliency: opponent-color convolution with a kernel stack.

The raw map is the mean absolute response of the stack over the three
CIELab channels; post-processing raises it to a power, applies a centered
Gaussian prior, blurs lightly, and normalizes to [0, 1].
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.signal import fftconvolve

from gsal import backend

# sRGB -> XYZ (D65 white) and the Lab white point
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])

#: direct convolution wins below this kernel side; FFT above
FFT_KERNEL_SIDE = 15


@dataclass
class LabImage:
    """CIELab planes of one image (float64, all shaped (height, width))."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.L.ndim != 2 or self.L.size == 0:
            raise ValueError("LabImage planes must be non-empty 2D arrays")
        if self.L.shape != self.a.shape or self.L.shape != self.b.shape:
            raise ValueError("LabImage planes must share one shape")

    @property
    def shape(self):
        return self.L.shape

    @property
    def height(self):
        return self.L.shape[0]

    @property
    def width(self):
        return self.L.shape[1]

    def channels(self):
        return (self.L, self.a, self.b)


@dataclass
class SaliencyMap:
    """A non-negative saliency grid plus a post-processing marker."""

    values: np.ndarray
    post_processed: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("saliency values must form a non-empty 2D array")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("saliency values must be finite and non-negative")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class PostProcessParams:
    """Power, center-prior width, and blur width for map post-processing.

    alpha >= 1 sharpens the contrast of the raw map; center_sigma is the
    std-dev (px) of the centered Gaussian prior; blur_sigma the std-dev of
    the final smoothing.
    """

    alpha: float = 5.0
    center_sigma: float = 32.0
    blur_sigma: float = 0.5

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.center_sigma <= 0 or self.blur_sigma <= 0:
            raise ValueError("center_sigma and blur_sigma must be positive")

    @classmethod
    def for_shape(cls, height, width, alpha=5.0, center_frac=0.25, blur_base=0.5):
        """Scale the default widths to a map shape.

        center_sigma = center_frac * min(h, w); blur_sigma = blur_base
        scaled by min(h, w)/128 so the blur footprint tracks resolution.
        """
        small = min(height, width)
        return cls(
            alpha=alpha,
            center_sigma=center_frac * small,
            blur_sigma=blur_base * (small / 128.0),
        )


def rgb_to_lab(image):
    """Convert an sRGB image to CIELab planes (D65 white point).

    Accepts uint8 in [0, 255] or float in [0, 1]; a 2D (grayscale) input is
    replicated across the three channels first.
    """
    arr = np.asarray(image)
    if arr.size == 0:
        raise ValueError("cannot convert an empty image")
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=-1)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w) or (h, w, 3) image, got shape {arr.shape}")
    if arr.dtype == np.uint8:
        rgb = arr.astype(np.float64) / 255.0
    else:
        rgb = arr.astype(np.float64)

    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T
    t = xyz / _WHITE

    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)

    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return LabImage(L=L, a=a, b=b)


def _convolve_channel(channel, kernel, stride, conv_mode):
    half = kernel.shape[0] // 2
    if conv_mode == "auto":
        conv_mode = "fft" if kernel.shape[0] > FFT_KERNEL_SIDE and stride == 1 else "direct"
    if conv_mode == "fft":
        padded = np.pad(channel, half, mode="edge")
        # correlation == convolution with the flipped kernel; stack kernels
        # are symmetric but this keeps both paths exact for any input
        return fftconvolve(padded, kernel[::-1, ::-1], mode="valid")
    return backend.conv2d(channel, kernel, stride)


def channel_saliency(lab, stack, stride=1, conv_mode="auto"):
    """Raw saliency: mean absolute stack response over L, a, b.

    stride > 1 evaluates the convolution on a subsampled grid and
    bilinearly upsamples the result back to the image shape. conv_mode is
    'auto' (FFT for large kernels at stride 1, direct otherwise), 'fft', or
    'direct'.
    """
    if conv_mode not in ("auto", "fft", "direct"):
        raise ValueError(f"conv_mode must be auto|fft|direct, got {conv_mode!r}")
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    if conv_mode == "fft" and stride > 1:
        raise ValueError("FFT convolution does not support stride > 1")
    h, w = lab.shape
    half = stack.realized.shape[0] // 2
    if half >= min(h, w):
        raise ValueError(
            f"kernel half-width {half} does not fit a {h}x{w} image; "
            "reduce the support radius or enlarge the image"
        )
    acc = np.zeros(
        (-(-h // stride), -(-w // stride)) if stride > 1 else (h, w), dtype=np.float64
    )
    for channel in lab.channels():
        acc += np.abs(_convolve_channel(channel, stack.realized, stride, conv_mode))
    acc /= 3.0
    if stride > 1:
        acc = backend.bilinear_resize(acc, h, w)
        acc = np.maximum(acc, 0.0)
    return SaliencyMap(values=acc, post_processed=False)


def post_process(raw, params):
    """Sharpen, center-weight, blur, and normalize a raw map to [0, 1].

    The chain is values**alpha, times a Gaussian centered on the map,
    then a Gaussian blur, then division by the max. A peak at or below
    1e-12 is numerical noise from a featureless input (the raw map of a
    constant image cancels to rounding error, which a bare division
    would amplify to full scale), so such maps come back all zero.
    Input must not already be post-processed.
    """
    if raw.post_processed:
        raise ValueError("map is already post-processed")
    values = raw.values**params.alpha

    h, w = values.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    center = np.exp(
        -((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * params.center_sigma**2)
    )
    values = values * center
    values = gaussian_filter(values, sigma=params.blur_sigma, mode="nearest")
    values = np.maximum(values, 0.0)

    peak = values.max()
    if peak > 1e-12:
        values = values / peak
    else:
        values = np.zeros_like(values)
    return SaliencyMap(values=values, post_processed=True)


def resize_rgb(image, out_h, out_w):
    """Bilinearly resize an RGB or grayscale image; returns float in [0, 1]."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64)
    if arr.ndim == 2:
        return np.clip(backend.bilinear_resize(arr, out_h, out_w), 0.0, 1.0)
    planes = [
        backend.bilinear_resize(arr[..., c], out_h, out_w) for c in range(arr.shape[2])
    ]
    return np.clip(np.stack(planes, axis=-1), 0.0, 1.0)


def compute_saliency(image, cfg, stack=None):
    """Full pipeline: resize, (optionally) foveate at center, convolve,
    post-process.

    ``image`` is an RGB/grayscale array (uint8 or float in [0, 1]); ``cfg``
    a :class:`gsal.config.RunConfig`. Pass a prebuilt ``stack`` to skip
    kernel construction. Returns the post-processed map at the working
    resolution.
    """
    if stack is None:
        stack = cfg.kernel_stack()
    working = prepare_image(image, cfg)
    if cfg.foveate:
        from gsal.foveation import foveate

        h, w = working.shape[:2]
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
        working = foveate(working, center, cfg.foveation_params()).pixels
    lab = rgb_to_lab(working)
    raw = channel_saliency(lab, stack, stride=cfg.stride)
    params = PostProcessParams.for_shape(
        lab.height,
        lab.width,
        alpha=cfg.alpha,
        center_frac=cfg.center_sigma_frac,
        blur_base=cfg.blur_sigma_base,
    )
    return post_process(raw, params)


def prepare_image(image, cfg):
    """Apply the configured working-resolution resize; returns float RGB."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=-1)
    if cfg.resize_h and cfg.resize_w:
        return resize_rgb(arr, cfg.resize_h, cfg.resize_w)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)
