"""Fixation-prediction metrics: AUC (Judd and Borji variants), SIM, CC,
NSS, bounding-box IoU, ROC curve export, and fixation density maps.

All scoring functions accept a SaliencyMap or a bare 2D array. AUCs are
computed by sweeping thresholds over the map values at the fixations, so
they are invariant under any strictly increasing transform of the map.
Degenerate (constant) maps score at chance by convention: AUC 0.5, NSS 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter


@dataclass
class FixationSet:
    """Recorded fixations for one image: (x, y) pixels plus image dims."""

    points: tuple
    width: int
    height: int
    image_id: str = ""

    def __post_init__(self):
        self.points = tuple((int(x), int(y)) for x, y in self.points)
        if self.width < 1 or self.height < 1:
            raise ValueError("image dims must be positive")
        for x, y in self.points:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(
                    f"fixation ({x}, {y}) outside {self.width}x{self.height} image"
                )

    def __len__(self):
        return len(self.points)

    def values_from(self, grid):
        xs = np.array([p[0] for p in self.points], dtype=np.int64)
        ys = np.array([p[1] for p in self.points], dtype=np.int64)
        return grid[ys, xs]


def _as_values(map_like):
    values = getattr(map_like, "values", map_like)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("expected a non-empty 2D saliency map")
    return values


def _checked(map_like, fix):
    values = _as_values(map_like)
    if len(fix) == 0:
        raise ValueError("scoring requires a non-empty fixation set")
    if values.shape != (fix.height, fix.width):
        raise ValueError(
            f"map shape {values.shape} does not match fixation dims "
            f"({fix.height}, {fix.width})"
        )
    return values


def density_map(fix, sigma):
    """Gaussian-blurred fixation histogram, normalized to sum 1."""
    if len(fix) == 0:
        raise ValueError("cannot build a density map from zero fixations")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    hist = np.zeros((fix.height, fix.width), dtype=np.float64)
    for x, y in fix.points:
        hist[y, x] += 1.0
    blurred = gaussian_filter(hist, sigma=sigma, mode="constant")
    blurred = np.maximum(blurred, 0.0)
    return blurred / blurred.sum()


def density_sigma(height, width, px_per_degree=None):
    """Default density blur: one degree of visual angle.

    Uses the dataset geometry when known, else 38 px scaled from a
    1080-px-tall reference frame.
    """
    if px_per_degree is not None:
        if px_per_degree <= 0:
            raise ValueError("px_per_degree must be positive")
        return float(px_per_degree)
    return 38.0 * min(height, width) / 1080.0


def _sweep(fix_values, other_values, other_is_all_pixels, n_fix_in_all=0):
    # threshold sweep over the fixation values, descending; returns the ROC
    # polyline from (0,0) to (1,1)
    thresholds = np.unique(fix_values)[::-1]
    n_fix = fix_values.size
    points = [(0.0, 0.0)]
    for t in thresholds:
        tp = float(np.count_nonzero(fix_values >= t)) / n_fix
        hits = float(np.count_nonzero(other_values >= t))
        if other_is_all_pixels:
            denom = other_values.size - n_fix_in_all
            hits -= float(np.count_nonzero(fix_values >= t))
        else:
            denom = other_values.size
        fp = hits / denom if denom > 0 else 1.0
        points.append((fp, tp))
    points.append((1.0, 1.0))
    return np.array(points)


def _curve_area(curve):
    # trapezoid rule over the (FPR, TPR) polyline
    dx = np.diff(curve[:, 0])
    my = (curve[1:, 1] + curve[:-1, 1]) / 2.0
    return float(np.sum(dx * my))


def roc_curve(map_like, fix, mode="judd", n_splits=100, seed=0):
    """ROC polyline as an (n, 2) array of (FPR, TPR), from (0,0) to (1,1).

    'judd' scores false positives over all non-fixation pixels; 'borji'
    over one seeded uniform sample of as many negatives as fixations (the
    first of auc_borji's splits).
    """
    values = _checked(map_like, fix)
    fix_values = fix.values_from(values)
    if mode == "judd":
        return _sweep(fix_values, values.ravel(), True, n_fix_in_all=len(fix))
    if mode == "borji":
        rng = np.random.default_rng(seed)
        flat = values.ravel()
        negatives = flat[rng.integers(0, flat.size, size=len(fix))]
        return _sweep(fix_values, negatives, False)
    raise ValueError(f"mode must be judd|borji, got {mode!r}")


def auc_judd(map_like, fix):
    """Judd AUC: fixations vs all non-fixation pixels; constant maps 0.5."""
    return _curve_area(roc_curve(map_like, fix, mode="judd"))


def auc_borji(map_like, fix, n_splits=100, seed=0):
    """Borji AUC: negatives drawn uniformly, as many as fixations, averaged
    over n_splits seeded draws; constant maps 0.5."""
    values = _checked(map_like, fix)
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    fix_values = fix.values_from(values)
    flat = values.ravel()
    rng = np.random.default_rng(seed)
    areas = np.empty(n_splits)
    for split in range(n_splits):
        negatives = flat[rng.integers(0, flat.size, size=len(fix))]
        areas[split] = _curve_area(_sweep(fix_values, negatives, False))
    return float(areas.mean())


def similarity(a, b):
    """Histogram intersection of two maps, each normalized to sum 1."""
    av, bv = _as_values(a), _as_values(b)
    if av.shape != bv.shape:
        raise ValueError(f"map shapes differ: {av.shape} vs {bv.shape}")
    if np.any(av < 0) or np.any(bv < 0):
        raise ValueError("similarity expects non-negative maps")
    sa, sb = av.sum(), bv.sum()
    if sa <= 0 or sb <= 0:
        raise ValueError("cannot normalize a zero map")
    return float(np.minimum(av / sa, bv / sb).sum())


def correlation(a, b):
    """Pearson correlation between two maps; 0 when either is constant."""
    av, bv = _as_values(a).ravel(), _as_values(b).ravel()
    if av.shape != bv.shape:
        raise ValueError("map shapes differ")
    da, db = av - av.mean(), bv - bv.mean()
    sa = float(np.sqrt(np.sum(da * da)))
    sb = float(np.sqrt(np.sum(db * db)))
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(np.sum(da * db) / (sa * sb))


def nss(map_like, fix):
    """Mean z-scored map value at the fixations; 0 for constant maps."""
    values = _checked(map_like, fix)
    std = float(values.std())
    if std == 0.0:
        return 0.0
    z = (values - values.mean()) / std
    return float(fix.values_from(z).mean())


def iou(box_a, box_b):
    """Intersection over union of two (x0, y0, x1, y1) boxes (exclusive
    upper edges)."""
    ax0, ay0, ax1, ay1 = box_a
    bx0, by0, bx1, by1 = box_b
    if ax1 <= ax0 or ay1 <= ay0 or bx1 <= bx0 or by1 <= by0:
        raise ValueError(f"degenerate box: {box_a} vs {box_b}")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = float(iw * ih)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def is_degenerate(map_like):
    """True when the map carries no signal (constant everywhere)."""
    values = _as_values(map_like)
    return bool(values.max() == values.min())
