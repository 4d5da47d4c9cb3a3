"""Saccadic fixation engine.

A fixation cycle repeatedly takes the argmax of the (inhibition-masked)
saliency map, estimates the attended object's spatial extent from the
kernel stack's ring responses, refines the object boundary on a local
patch, emits a micro-scan over the segmented object, and suppresses the
region so the next saccade moves on. The cycle stops when no location
clears the saliency threshold (stop_reason 'featureless') or when the
fixation budget runs out ('max_fixations').

All coordinates are (x, y) pixels in the working frame, x = column,
y = row. Extent boxes are (x0, y0, x1, y1) with exclusive upper edges,
so the box area is (x1-x0)*(y1-y0).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from gsal.kernels import build_kernel, default_support_radius, min_support_radius, stack_from_params
from gsal.saliency import (
    LabImage,
    PostProcessParams,
    SaliencyMap,
    channel_saliency,
    post_process,
    prepare_image,
    rgb_to_lab,
)


@dataclass
class Fixation:
    """One attended location: position, score, extent box, winning scale."""

    point: tuple
    saliency_value: float
    extent: tuple
    scale_index: int


@dataclass
class FixationTrace:
    """Ordered fixations plus the final inhibition state and stop cause."""

    fixations: list
    inhibition_map: np.ndarray
    stop_reason: str


@dataclass
class ScanSequence:
    """Micro-scan over a segmented patch: fixed-size frames in path order."""

    frames: list
    path_kind: str
    frame_count: int


@dataclass
class EngineConfig:
    """Knobs of the fixation cycle itself.

    theta is the stopping threshold on the inhibited map; path_kind is
    'zigzag' (row-major raster) or 'circular'; foveate replays the
    space-variant acuity at the current gaze before each saliency
    recompute (off: the map is computed once on the unblurred frame).
    """

    theta: float = 0.2
    max_fixations: int = 30
    path_kind: str = "zigzag"
    frame_count: int = 5
    frame_size: int = 16
    foveate: bool = False
    refine: bool = True

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.max_fixations < 1:
            raise ValueError("max_fixations must be >= 1")
        if self.path_kind not in ("zigzag", "circular"):
            raise ValueError(f"path_kind must be zigzag|circular, got {self.path_kind!r}")
        if self.frame_count < 1 or self.frame_size < 1:
            raise ValueError("frame_count and frame_size must be >= 1")


@dataclass
class FixationDetail:
    """Per-fixation artifacts: refined patch, object mask, micro-scan."""

    patch: np.ndarray
    mask: np.ndarray
    refined_box: tuple
    scan: ScanSequence


@dataclass
class CycleResult:
    """run_cycle output: the trace plus per-fixation artifacts and the
    working-resolution image the engine actually saw."""

    trace: FixationTrace
    details: list
    working_image: np.ndarray


def next_fixation(map_values, inhibition, theta=0.2):
    """Argmax of map * inhibition, or None below the threshold.

    Returns ((x, y), value) where value is the inhibited score that won;
    ties resolve to the smallest row, then column. None means no location
    reaches theta (the featureless-stop condition).
    """
    values = np.asarray(map_values, dtype=np.float64)
    inhib = np.asarray(inhibition, dtype=np.float64)
    if values.shape != inhib.shape:
        raise ValueError(
            f"map shape {values.shape} != inhibition shape {inhib.shape}"
        )
    masked = values * inhib
    flat = int(np.argmax(masked))
    y, x = divmod(flat, masked.shape[1])
    best = float(masked[y, x])
    if best < theta:
        return None
    return (x, y), best


def _point_response(lab, kernel, point):
    # mean |inner product| over Lab channels, replicate-clipped at borders
    x, y = int(round(point[0])), int(round(point[1]))
    h, w = lab.shape
    r = kernel.shape[0] // 2
    ys = np.clip(np.arange(y - r, y + r + 1), 0, h - 1)
    xs = np.clip(np.arange(x - r, x + r + 1), 0, w - 1)
    total = 0.0
    for chan in lab.channels():
        total += abs(float(np.sum(chan[np.ix_(ys, xs)] * kernel)))
    return total / 3.0


def estimate_extent(image, point, stack):
    """Estimate the attended object's extent from ring responses.

    Evaluates the unit-mass center kernel and each ring kernel at the
    fixation (local means at growing radii) and differences consecutive
    responses; the largest drop marks the radius where object gives way
    to background. Returns (box, scale_index) with the box half-width set
    by the winning scale's surround radius, clipped to the image.
    """
    lab = image if isinstance(image, LabImage) else rgb_to_lab(image)
    h, w = lab.shape
    x, y = int(round(point[0])), int(round(point[1]))
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"fixation ({x}, {y}) outside a {w}x{h} image")
    probes = [stack.specs[0]] + [stack.specs[2 * i + 1] for i in range(stack.n_scales)]
    responses = [_point_response(lab, build_kernel(spec), (x, y)) for spec in probes]
    diffs = [responses[i] - responses[i + 1] for i in range(len(responses) - 1)]
    scale = int(np.argmax(diffs))
    half = round(stack.specs[2 * scale + 1].ring_radius)
    box = (
        max(0, x - half),
        max(0, y - half),
        min(w, x + half + 1),
        min(h, y + half + 1),
    )
    return box, scale


def inhibit(inhibition, fixation):
    """Suppress the neighborhood of a fixation (inhibition of return).

    Multiplies the inhibition grid by 1 - A*G, where G is a unit-peak
    Gaussian centered on the fixation with sigma = half the extent box
    half-width, and A is the fixation's saliency value clipped to [0, 1].
    Pure: returns a new grid.
    """
    x0, y0, x1, y1 = fixation.extent
    half = max(x1 - x0, y1 - y0) / 2.0
    sigma = max(half / 2.0, 0.5)
    amp = min(max(float(fixation.saliency_value), 0.0), 1.0)
    h, w = inhibition.shape
    fx, fy = fixation.point
    yy, xx = np.mgrid[0:h, 0:w]
    gauss = np.exp(-((yy - fy) ** 2 + (xx - fx) ** 2) / (2.0 * sigma**2))
    return inhibition * (1.0 - amp * gauss)


def _zero_disk(inhibition, point, radius):
    # hard core: no residual saliency inside the fovea of a past fixation
    h, w = inhibition.shape
    fx, fy = point
    yy, xx = np.mgrid[0:h, 0:w]
    out = inhibition.copy()
    out[(yy - fy) ** 2 + (xx - fx) ** 2 <= radius * radius] = 0.0
    return out


def otsu_threshold(values, bins=256):
    """Classic Otsu threshold: maximize between-class variance over a
    histogram of ``values``. Returns the threshold level."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = float(flat.min()), float(flat.max())
    if hi <= lo:
        return lo
    hist, edges = np.histogram(flat, bins=bins, range=(lo, hi))
    hist = hist.astype(np.float64)
    total = hist.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0

    weight_bg = np.cumsum(hist)
    weight_fg = total - weight_bg
    mass_bg = np.cumsum(hist * centers)
    mass_total = mass_bg[-1]

    valid = (weight_bg > 0) & (weight_fg > 0)
    mean_bg = np.where(valid, mass_bg / np.maximum(weight_bg, 1e-12), 0.0)
    mean_fg = np.where(valid, (mass_total - mass_bg) / np.maximum(weight_fg, 1e-12), 0.0)
    between = np.where(valid, weight_bg * weight_fg * (mean_bg - mean_fg) ** 2, -1.0)
    return float(centers[int(np.argmax(between))])


def _reduced_stack(stack, patch_shape):
    # drop the coarsest scale, then any scale whose ring cannot fit the patch
    max_half = (min(patch_shape) - 1) // 2
    radii = [stack.specs[2 * i + 1].ring_radius for i in range(stack.n_scales)]
    coarsest = int(np.argmax(radii))
    k_values, mu_values = [], []
    for i in range(stack.n_scales):
        if i == coarsest and stack.n_scales > 1:
            continue
        center, ring = stack.scale_pair(i)
        if min_support_radius(ring.k, ring.mu) > max_half:
            continue
        k_values += [center.k, ring.k]
        mu_values += [center.mu, ring.mu]
    if not k_values:
        return None
    support = min(default_support_radius(k_values, mu_values), max_half)
    return stack_from_params(k_values, mu_values, support)


def refine_and_segment(image, point, extent, stack, alpha=5.0):
    """Re-segment the attended object on a local patch.

    Recomputes saliency on a context window of twice the extent using a
    reduced stack (coarsest scale dropped, scales that cannot fit the
    patch dropped), thresholds it with Otsu, and keeps the connected
    component under the fixation (largest component as fallback).

    Returns (patch, mask, box): the image crop of the tightened box, the
    object mask over that crop, and the box in working-frame coordinates.
    When no reduced scale fits or segmentation degenerates, the original
    extent is returned with a full mask.
    """
    arr = np.asarray(image)
    lab = rgb_to_lab(arr)
    h, w = lab.shape
    x0, y0, x1, y1 = extent
    bw, bh = x1 - x0, y1 - y0
    if bw <= 0 or bh <= 0:
        raise ValueError(f"degenerate extent box {extent}")
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    gx0 = max(0, int(round(cx - bw)))
    gy0 = max(0, int(round(cy - bh)))
    gx1 = min(w, int(round(cx + bw)))
    gy1 = min(h, int(round(cy + bh)))

    def fallback():
        return _crop(arr, extent), np.ones((y1 - y0, x1 - x0), dtype=bool), extent

    patch_lab = LabImage(
        L=lab.L[gy0:gy1, gx0:gx1], a=lab.a[gy0:gy1, gx0:gx1], b=lab.b[gy0:gy1, gx0:gx1]
    )
    reduced = _reduced_stack(stack, patch_lab.shape)
    if reduced is None:
        return fallback()

    raw = channel_saliency(patch_lab, reduced)
    params = PostProcessParams.for_shape(patch_lab.height, patch_lab.width, alpha=alpha)
    local = post_process(raw, params).values
    if local.max() <= local.min():
        return fallback()

    binary = local > otsu_threshold(local)
    labels, count = ndimage.label(binary, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return fallback()
    px, py = int(round(point[0])) - gx0, int(round(point[1])) - gy0
    target = 0
    if 0 <= py < labels.shape[0] and 0 <= px < labels.shape[1]:
        target = labels[py, px]
    if target == 0:
        sizes = ndimage.sum_labels(binary, labels, index=np.arange(1, count + 1))
        target = int(np.argmax(sizes)) + 1
    component = labels == target
    rows = np.flatnonzero(component.any(axis=1))
    cols = np.flatnonzero(component.any(axis=0))
    box = (gx0 + cols[0], gy0 + rows[0], gx0 + cols[-1] + 1, gy0 + rows[-1] + 1)
    mask = component[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    return _crop(arr, box), mask, box


def _crop(image, box):
    x0, y0, x1, y1 = box
    return image[y0:y1, x0:x1].copy()


def make_scan(patch, path_kind="zigzag", frame_count=5, frame_size=16):
    """Cut a deterministic sequence of frames from a patch.

    'zigzag' lays frame centers on a near-square grid walked row-major,
    left to right, top to bottom; 'circular' spaces them at equal angles
    on the largest centered circle the frames allow. The frame must fit
    the patch.
    """
    arr = np.asarray(patch)
    if arr.ndim not in (2, 3) or arr.size == 0:
        raise ValueError("patch must be a non-empty 2D or 3D array")
    if path_kind not in ("zigzag", "circular"):
        raise ValueError(f"path_kind must be zigzag|circular, got {path_kind!r}")
    frame_count = int(frame_count)
    frame_size = int(frame_size)
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    h, w = arr.shape[:2]
    if frame_size < 1 or frame_size > min(h, w):
        raise ValueError(
            f"frame_size {frame_size} does not fit a {h}x{w} patch"
        )
    max_y, max_x = h - frame_size, w - frame_size

    if path_kind == "zigzag":
        ncols = math.ceil(math.sqrt(frame_count))
        nrows = math.ceil(frame_count / ncols)
        xs = _spread(max_x, ncols)
        ys = _spread(max_y, nrows)
        positions = [(x, y) for y in ys for x in xs][:frame_count]
    else:
        ccx, ccy = max_x / 2.0, max_y / 2.0
        radius = min(ccx, ccy)
        positions = []
        for t in range(frame_count):
            angle = 2.0 * math.pi * t / frame_count
            positions.append(
                (
                    int(round(ccx + radius * math.cos(angle))),
                    int(round(ccy + radius * math.sin(angle))),
                )
            )
    frames = [arr[y : y + frame_size, x : x + frame_size].copy() for x, y in positions]
    return ScanSequence(frames=frames, path_kind=path_kind, frame_count=frame_count)


def _spread(extent, n):
    # n integer offsets evenly covering [0, extent]
    if n == 1:
        return [extent // 2]
    return [int(round(extent * i / (n - 1))) for i in range(n)]


def run_cycle(image, cfg, stack=None, saliency_map=None):
    """Run the full fixate-estimate-refine-scan-inhibit loop.

    ``image`` is an RGB/gray array; ``cfg`` a :class:`gsal.config.RunConfig`.
    The frame is first brought to the working resolution; all returned
    coordinates live in that frame. Pass ``saliency_map`` to drive the
    engine from a precomputed (post-processed) map instead of the
    bottom-up pipeline -- the map must match the working frame and
    disables per-fixation refoveation.

    Gaze starts at the frame center (an initial condition, not a recorded
    fixation). Each accepted fixation is suppressed two ways: the
    contracted Gaussian inhibition, plus a hard zero disk of the winning
    scale's ring radius, which guarantees no later fixation lands within
    that fovea radius.
    """
    if stack is None:
        stack = cfg.kernel_stack()
    engine = cfg.engine_config()
    working = prepare_image(image, cfg)
    h, w = working.shape[:2]
    lab = rgb_to_lab(working)

    static = None
    if saliency_map is not None:
        values = saliency_map.values if isinstance(saliency_map, SaliencyMap) else np.asarray(saliency_map)
        if values.shape != (h, w):
            raise ValueError(
                f"saliency map shape {values.shape} does not match working frame {(h, w)}"
            )
        static = values
    elif not engine.foveate:
        static = _frame_saliency(working, stack, cfg)

    inhibition = np.ones((h, w), dtype=np.float64)
    gaze = ((w - 1) / 2.0, (h - 1) / 2.0)
    fixations = []
    details = []
    stop_reason = "max_fixations"

    for _ in range(engine.max_fixations):
        if static is not None:
            current = static
        else:
            from gsal.foveation import foveate

            blurred = foveate(working, gaze, cfg.foveation_params()).pixels
            current = _frame_saliency(blurred, stack, cfg)
        candidate = next_fixation(current, inhibition, engine.theta)
        if candidate is None:
            stop_reason = "featureless"
            break
        point, value = candidate
        extent, scale = estimate_extent(lab, point, stack)
        fix = Fixation(point=point, saliency_value=value, extent=extent, scale_index=scale)

        if engine.refine:
            patch, mask, refined_box = refine_and_segment(
                working, point, extent, stack, alpha=cfg.alpha
            )
        else:
            patch = _crop(working, extent)
            mask = np.ones(patch.shape[:2], dtype=bool)
            refined_box = extent
        frame_size = min(engine.frame_size, patch.shape[0], patch.shape[1])
        scan = make_scan(patch, engine.path_kind, engine.frame_count, frame_size)

        fixations.append(fix)
        details.append(FixationDetail(patch=patch, mask=mask, refined_box=refined_box, scan=scan))

        fovea_radius = round(stack.specs[2 * scale + 1].ring_radius)
        inhibition = inhibit(inhibition, fix)
        inhibition = _zero_disk(inhibition, point, fovea_radius)
        gaze = point

    trace = FixationTrace(
        fixations=fixations, inhibition_map=inhibition, stop_reason=stop_reason
    )
    return CycleResult(trace=trace, details=details, working_image=working)


def _frame_saliency(frame, stack, cfg):
    lab = rgb_to_lab(frame)
    raw = channel_saliency(lab, stack, stride=cfg.stride)
    params = PostProcessParams.for_shape(
        lab.height,
        lab.width,
        alpha=cfg.alpha,
        center_frac=cfg.center_sigma_frac,
        blur_base=cfg.blur_sigma_base,
    )
    return post_process(raw, params).values
