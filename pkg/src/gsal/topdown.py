"""Top-down saliency: reweight external feature maps toward a target class.

Feature maps come from outside (any fully convolutional network dumped to
the tensor format); this module convolves each map with the gamma stack,
learns per-class weights as inside/outside box-saliency ratios, combines
the weighted maps into a class-conditioned saliency map, and fuses it
multiplicatively with bottom-up saliency for guided search.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from gsal import backend
from gsal.fixation import run_cycle
from gsal.kernels import KernelStack, stack_from_params
from gsal.metrics import iou
from gsal.saliency import (
    PostProcessParams,
    SaliencyMap,
    _convolve_channel,
    compute_saliency,
    post_process,
)

#: floor factor for a map with zero outside-box saliency during training
EPS_OUTSIDE = 1e-6


@dataclass
class FeatureMapStack:
    """N same-shaped feature maps plus provenance and grid geometry.

    spatial_scale maps feature-grid pixels to image pixels (16 for a
    stride-16 network layer; 1 when the maps live at image resolution).
    """

    maps: np.ndarray
    source_tag: str = ""
    spatial_scale: float = 1.0

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float64)
        if self.maps.ndim != 3 or self.maps.shape[0] < 1:
            raise ValueError("feature maps must form an (N, h, w) array with N >= 1")
        if not np.all(np.isfinite(self.maps)):
            raise ValueError("feature maps must be finite")
        if self.spatial_scale <= 0:
            raise ValueError("spatial_scale must be positive")

    @property
    def n_maps(self):
        return self.maps.shape[0]

    @property
    def grid_shape(self):
        return self.maps.shape[1:]


@dataclass
class LabeledBox:
    """A class-labeled bounding box in feature-grid coordinates."""

    image_id: str
    class_id: str
    box: tuple

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"degenerate box {self.box}")


@dataclass
class TopDownModel:
    """Per-class feature weights plus the kernel stack they were trained with."""

    classes: tuple
    weights: np.ndarray
    alpha: float
    stack_spec: KernelStack
    training_flags: tuple = field(default=())

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != len(self.classes):
            raise ValueError("weights must be (n_classes, n_maps)")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and non-negative")
        if np.any(self.weights.max(axis=1) <= 0):
            raise ValueError("every class needs at least one positive weight")

    @property
    def n_maps(self):
        return self.weights.shape[1]

    def class_index(self, class_id):
        try:
            return self.classes.index(class_id)
        except ValueError:
            raise ValueError(
                f"unknown class {class_id!r}; model knows {list(self.classes)}"
            ) from None


def raw_map_saliency(stack, kernel, alpha=5.0):
    """Per-map gamma responses: |kernel * map| ** alpha, shaped (N, h, w)."""
    if alpha < 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    gh, gw = stack.grid_shape
    half = kernel.realized.shape[0] // 2
    if half >= min(gh, gw):
        raise ValueError(
            f"kernel half-width {half} does not fit the {gh}x{gw} feature grid"
        )
    out = np.empty((stack.n_maps, gh, gw), dtype=np.float64)
    for n in range(stack.n_maps):
        conv = _convolve_channel(stack.maps[n], kernel.realized, 1, "auto")
        out[n] = np.abs(conv) ** alpha
    return out


def _box_masks(box, shape):
    h, w = shape
    x0, y0, x1, y1 = (int(v) for v in box)
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise ValueError(f"box {box} outside the {w}x{h} feature grid")
    inside = np.zeros((h, w), dtype=bool)
    inside[y0:y1, x0:x1] = True
    if inside.all():
        raise ValueError(f"box {box} covers the whole grid; no outside region")
    return inside, ~inside


def learn_weights(training, kernel, alpha=5.0):
    """Fit per-class weights from labeled boxes.

    For each (stack, box) pair the weight contribution of map n is the
    area-mean raw saliency inside the box over the area-mean outside; a
    class weight is the arithmetic mean of its images' ratios. Maps whose
    outside mean is zero are floored at EPS_OUTSIDE * map max and recorded
    in the model's training_flags as "image_id:mapN".
    """
    if not training:
        raise ValueError("training set is empty")
    n_maps = training[0][0].n_maps
    ratios = {}
    flags = []
    for stack, labeled in training:
        if stack.n_maps != n_maps:
            raise ValueError(
                f"inconsistent map count: {stack.n_maps} vs {n_maps}"
            )
        inside, outside = _box_masks(labeled.box, stack.grid_shape)
        raws = raw_map_saliency(stack, kernel, alpha)
        row = np.empty(n_maps)
        for n in range(n_maps):
            s_in = float(raws[n][inside].mean())
            s_out = float(raws[n][outside].mean())
            if s_out <= 0.0:
                peak = float(raws[n].max())
                flags.append(f"{labeled.image_id}:map{n}")
                if peak <= 0.0:
                    row[n] = 0.0
                    continue
                s_out = EPS_OUTSIDE * peak
            row[n] = s_in / s_out
        ratios.setdefault(labeled.class_id, []).append(row)
    classes = tuple(sorted(ratios))
    weights = np.stack([np.mean(ratios[c], axis=0) for c in classes])
    return TopDownModel(
        classes=classes,
        weights=weights,
        alpha=alpha,
        stack_spec=kernel,
        training_flags=tuple(flags),
    )


def topdown_map(stack, model, class_id):
    """Class-conditioned saliency at image resolution, normalized to [0, 1].

    Weighted mean of the per-map responses (divided by N), then the
    standard post chain -- center prior, blur, max-normalization; the
    enhancement power already sits in the per-map responses, so the chain
    runs with exponent 1 -- and finally resampling by spatial_scale.
    """
    idx = model.class_index(class_id)
    if stack.n_maps != model.n_maps:
        raise ValueError(
            f"stack has {stack.n_maps} maps but the model was trained on {model.n_maps}"
        )
    raws = raw_map_saliency(stack, model.stack_spec, model.alpha)
    combined = np.tensordot(model.weights[idx], raws, axes=1) / stack.n_maps
    gh, gw = combined.shape
    params = PostProcessParams.for_shape(gh, gw, alpha=1.0)
    processed = post_process(SaliencyMap(values=combined), params).values
    if stack.spatial_scale != 1.0:
        out_h = max(1, round(gh * stack.spatial_scale))
        out_w = max(1, round(gw * stack.spatial_scale))
        processed = np.maximum(backend.bilinear_resize(processed, out_h, out_w), 0.0)
        peak = processed.max()
        if peak > 0:
            processed = processed / peak
    return SaliencyMap(values=processed, post_processed=True)


def fuse(bottom_up, top_down):
    """Multiplicative fusion of two [0, 1] maps, re-normalized to [0, 1]."""
    if bottom_up.shape != top_down.shape:
        raise ValueError(
            f"map shapes differ: {bottom_up.shape} vs {top_down.shape}"
        )
    values = bottom_up.values * top_down.values
    peak = values.max()
    if peak > 0:
        values = values / peak
    return SaliencyMap(values=values, post_processed=True)


@dataclass
class SearchResult:
    """Guided-search outcome: the trace, per-fixation details, and the
    saccade count to the target (max_fixations when never found)."""

    trace: object
    details: list
    saccades: int
    found: bool


def saccades_to_target(details, target_box, threshold=0.5):
    """1-based index of the first fixation whose refined patch overlaps the
    target with IoU > threshold; None when no fixation qualifies."""
    for i, det in enumerate(details):
        if iou(det.refined_box, target_box) > threshold:
            return i + 1
    return None


def search(image, stack, model, class_id, cfg, target_box=None):
    """Run guided search: fuse top-down with bottom-up, then fixate.

    The top-down map fixes the working frame (its shape after
    spatial_scale resampling); the bottom-up map is computed at that size
    and the fixation engine runs on the fused product. With a
    ``target_box`` (working-frame pixels) the result carries the saccade
    count to the first fixation whose refined patch has IoU > 0.5 with it;
    a never-found target reports max_fixations and found=False.
    """
    td = topdown_map(stack, model, class_id)
    h, w = td.shape
    frame_cfg = replace(cfg, resize_h=h, resize_w=w)
    bu = compute_saliency(image, frame_cfg)
    fused = fuse(bu, td)
    result = run_cycle(image, frame_cfg, saliency_map=fused)
    saccades = None
    found = False
    if target_box is not None:
        hit = saccades_to_target(result.details, target_box)
        if hit is None:
            saccades = frame_cfg.max_fixations
        else:
            saccades, found = hit, True
    return SearchResult(
        trace=result.trace, details=result.details, saccades=saccades, found=found
    )


def save_model(path, model):
    """Write a model as a small tab-separated table with a kernel header."""
    from pathlib import Path

    spec_k = ",".join(str(s.k) for s in model.stack_spec.specs)
    spec_mu = ",".join(repr(s.mu) for s in model.stack_spec.specs)
    lines = [
        f"# alpha={model.alpha!r}",
        f"# k={spec_k}",
        f"# mu={spec_mu}",
        f"# support_radius={model.stack_spec.support_radius}",
    ]
    for flag in model.training_flags:
        lines.append(f"# flag={flag}")
    lines.append("class\tmap_index\tweight")
    for ci, class_id in enumerate(model.classes):
        for n in range(model.n_maps):
            lines.append(f"{class_id}\t{n}\t{float(model.weights[ci, n])!r}")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")


def load_model(path):
    """Read a model written by save_model; weights round-trip bit-exactly."""
    from pathlib import Path

    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"model file not found: {source}")
    header = {}
    flags = []
    rows = {}
    for lineno, raw in enumerate(source.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "flag":
                flags.append(value.strip())
            else:
                header[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if parts == ["class", "map_index", "weight"]:
            continue
        if len(parts) != 3:
            raise ValueError(f"{source}:{lineno}: expected class<TAB>index<TAB>weight")
        try:
            rows.setdefault(parts[0], {})[int(parts[1])] = float(parts[2])
        except ValueError:
            raise ValueError(f"{source}:{lineno}: bad weight row {line!r}") from None
    for key in ("alpha", "k", "mu", "support_radius"):
        if key not in header:
            raise ValueError(f"{source}: missing '# {key}=' header")
    if not rows:
        raise ValueError(f"{source}: no weight rows")
    k = tuple(int(v) for v in header["k"].split(","))
    mu = tuple(float(v) for v in header["mu"].split(","))
    kernel = stack_from_params(k, mu, int(header["support_radius"]))
    classes = tuple(rows)
    n_maps = max(max(idx) for idx in rows.values()) + 1
    weights = np.zeros((len(classes), n_maps))
    for ci, class_id in enumerate(classes):
        for n, value in rows[class_id].items():
            weights[ci, n] = value
    return TopDownModel(
        classes=classes,
        weights=weights,
        alpha=float(header["alpha"]),
        stack_spec=kernel,
        training_flags=tuple(flags),
    )
