"""Dataset and artifact I/O: images, tensor files, manifests, fixation
files, traces, and rendered outputs.

The tensor format is the interchange contract with external feature-map
producers: a 20-byte header (magic "GSAL", version u16, H u32, W u32,
N u32, dtype u16) followed by N*H*W little-endian float32 values,
row-major with the map index outermost. Writers and readers round-trip
bit-exactly.
"""

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from gsal.fixation import Fixation, FixationTrace
from gsal.metrics import FixationSet

TENSOR_MAGIC = b"GSAL"
TENSOR_VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHIIIH")
#: sanity cap on element count (8 GiB of float32)
MAX_ELEMENTS = 1 << 31


class TensorFormatError(ValueError):
    """A tensor file violates the byte-format contract."""


def write_tensor(path, array):
    """Write a (N, h, w) or (h, w) float array as a tensor file."""
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None, ...]
    if arr.ndim != 3:
        raise ValueError(f"expected (h, w) or (N, h, w) array, got shape {arr.shape}")
    n, h, w = arr.shape
    if n < 1 or h < 1 or w < 1:
        raise ValueError(f"tensor dims must be positive, got {arr.shape}")
    if n * h * w > MAX_ELEMENTS:
        raise ValueError(f"tensor of {n}x{h}x{w} elements exceeds the size cap")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor values must be finite")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(arr).astype("<f4", copy=False).tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TENSOR_MAGIC, TENSOR_VERSION, h, w, n, DTYPE_F32))
        fh.write(payload)


def read_tensor(path):
    """Read a tensor file back as a (N, h, w) float32 array."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TensorFormatError(
                f"{path}: truncated header ({len(header)} of {_HEADER.size} bytes)"
            )
        magic, version, h, w, n, dtype = _HEADER.unpack(header)
        if magic != TENSOR_MAGIC:
            raise TensorFormatError(f"{path}: bad magic {magic!r}")
        if version != TENSOR_VERSION:
            raise TensorFormatError(f"{path}: unsupported version {version}")
        if dtype != DTYPE_F32:
            raise TensorFormatError(f"{path}: unsupported dtype code {dtype}")
        if h < 1 or w < 1 or n < 1:
            raise TensorFormatError(f"{path}: zero dimension in header ({h}, {w}, {n})")
        if n * h * w > MAX_ELEMENTS:
            raise TensorFormatError(
                f"{path}: dimensions {n}x{h}x{w} overflow the size cap"
            )
        expected = n * h * w * 4
        payload = fh.read(expected + 1)
        if len(payload) < expected:
            raise TensorFormatError(
                f"{path}: truncated payload (expected {expected} bytes, found {len(payload)})"
            )
        if len(payload) > expected:
            raise TensorFormatError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload[:expected], dtype="<f4").reshape(n, h, w).copy()


def load_image(path):
    """Load PNG/JPEG/BMP as an 8-bit sRGB (h, w, 3) array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image not found: {path}")
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_image(path, array):
    """Save a uint8 or [0, 1] float raster as an image file."""
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)


@dataclass
class ManifestEntry:
    """One dataset row: image plus optional fixations, boxes, class label."""

    image: Path
    fixations: Path = None
    boxes: list = field(default_factory=list)
    label: str = None

    @property
    def image_id(self):
        return self.image.stem


@dataclass
class DatasetManifest:
    """Validated dataset listing plus geometry metadata."""

    entries: list
    name: str = ""
    px_per_degree: float = None
    root: Path = Path(".")

    def __len__(self):
        return len(self.entries)


def load_manifest(path):
    """Parse a tab-separated dataset manifest.

    Rows are `image<TAB>fixation-file<TAB>boxes<TAB>class` with `-` (or a
    short row) for absent fields; boxes are semicolon-separated
    `x0,y0,x1,y1`. Header lines start with `#` and may carry `key=value`
    metadata (name, px_per_degree). Paths resolve against the manifest's
    directory; every referenced file must exist.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    root = path.parent
    entries = []
    seen = set()
    name = ""
    px_per_degree = None
    for lineno, rawline in enumerate(path.read_text().splitlines(), start=1):
        line = rawline.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key, value = key.strip(), value.strip()
                if key == "name":
                    name = value
                elif key == "px_per_degree":
                    try:
                        px_per_degree = float(value)
                    except ValueError:
                        raise ValueError(
                            f"{path}:{lineno}: bad px_per_degree {value!r}"
                        ) from None
                    if px_per_degree <= 0:
                        raise ValueError(f"{path}:{lineno}: px_per_degree must be > 0")
            continue
        fields = line.split("\t")
        image = root / fields[0]
        if not image.exists():
            raise FileNotFoundError(f"{path}:{lineno}: image not found: {image}")
        if image.stem in seen:
            raise ValueError(f"{path}:{lineno}: duplicate image id {image.stem!r}")
        seen.add(image.stem)

        fixations = None
        if len(fields) > 1 and fields[1] not in ("", "-"):
            fixations = root / fields[1]
            if not fixations.exists():
                raise FileNotFoundError(
                    f"{path}:{lineno}: fixation file not found: {fixations}"
                )
        boxes = []
        if len(fields) > 2 and fields[2] not in ("", "-"):
            for token in fields[2].split(";"):
                parts = token.split(",")
                try:
                    box = tuple(int(v) for v in parts)
                except ValueError:
                    box = ()
                if len(box) != 4 or box[2] <= box[0] or box[3] <= box[1]:
                    raise ValueError(f"{path}:{lineno}: malformed box {token!r}")
                boxes.append(box)
        label = None
        if len(fields) > 3 and fields[3] not in ("", "-"):
            label = fields[3]
        entries.append(ManifestEntry(image=image, fixations=fixations, boxes=boxes, label=label))
    return DatasetManifest(entries=entries, name=name, px_per_degree=px_per_degree, root=root)


def read_fixations(path, width, height, image_id=""):
    """Read a plain-text fixation file: one `x y [observer]` per line.

    Coordinates are rounded to pixels; values on the far edge clamp to the
    last pixel so datasets that record width/height-inclusive coordinates
    load cleanly.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"fixation file not found: {path}")
    points = []
    for lineno, rawline in enumerate(path.read_text().splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'x y [observer]', got {line!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric coordinates {line!r}") from None
        points.append(
            (min(max(int(round(x)), 0), width - 1), min(max(int(round(y)), 0), height - 1))
        )
    return FixationSet(points=tuple(points), width=width, height=height, image_id=image_id)


def write_fixations(path, fix):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{x} {y}" for x, y in fix.points]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


def write_trace(path, trace, frame_shape=None):
    """Persist a fixation trace as tabular text (bit-exact round-trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# stop_reason={trace.stop_reason}"]
    if frame_shape is not None:
        lines.append(f"# frame={frame_shape[0]}x{frame_shape[1]}")
    lines.append("# columns=index x y saliency x0 y0 x1 y1 scale")
    for i, fix in enumerate(trace.fixations):
        x0, y0, x1, y1 = fix.extent
        lines.append(
            f"{i}\t{fix.point[0]}\t{fix.point[1]}\t{fix.saliency_value!r}"
            f"\t{x0}\t{y0}\t{x1}\t{y1}\t{fix.scale_index}"
        )
    path.write_text("\n".join(lines) + "\n")


def read_trace(path):
    """Read a trace file; returns (FixationTrace, frame_shape or None)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace not found: {path}")
    stop_reason = "max_fixations"
    frame_shape = None
    fixations = []
    for rawline in path.read_text().splitlines():
        line = rawline.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("stop_reason="):
                stop_reason = body.split("=", 1)[1]
            elif body.startswith("frame="):
                h, _, w = body.split("=", 1)[1].partition("x")
                frame_shape = (int(h), int(w))
            continue
        parts = line.split("\t")
        fixations.append(
            Fixation(
                point=(int(parts[1]), int(parts[2])),
                saliency_value=float(parts[3]),
                extent=(int(parts[4]), int(parts[5]), int(parts[6]), int(parts[7])),
                scale_index=int(parts[8]),
            )
        )
    trace = FixationTrace(fixations=fixations, inhibition_map=None, stop_reason=stop_reason)
    return trace, frame_shape


def render_heatmap(map_like, underlay=None, alpha=0.6):
    """Colormap a [0, 1] saliency map; optionally alpha-blend over an image.

    Returns uint8 RGB. alpha=0 leaves the underlay untouched; alpha=1
    shows the bare heatmap.
    """
    from matplotlib import colormaps

    values = getattr(map_like, "values", map_like)
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    heat = (colormaps["viridis"](values)[..., :3] * 255.0).round().astype(np.uint8)
    if underlay is None:
        return heat
    under = np.asarray(underlay)
    if under.dtype != np.uint8:
        under = np.clip(np.rint(under * 255.0), 0, 255).astype(np.uint8)
    if under.ndim == 2:
        under = np.stack([under] * 3, axis=-1)
    if under.shape[:2] != values.shape:
        raise ValueError(
            f"underlay shape {under.shape[:2]} does not match map {values.shape}"
        )
    if alpha == 0:
        return under.copy()
    blended = (1.0 - alpha) * under.astype(np.float64) + alpha * heat.astype(np.float64)
    return np.clip(np.rint(blended), 0, 255).astype(np.uint8)


MARKER_COLOR = (230, 40, 40)
BOX_COLOR = (250, 220, 60)
LINE_COLOR = (70, 160, 250)
LABEL_COLOR = (255, 255, 255)


def render_trace(image, trace):
    """Draw a fixation trace: numbered markers, extent boxes, saccade lines.

    An empty trace returns the image unchanged. The pixel at each fixation
    point carries MARKER_COLOR exactly.
    """
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    if not trace.fixations:
        return arr.copy()
    img = Image.fromarray(arr)
    draw = ImageDraw.Draw(img)
    for i in range(len(trace.fixations) - 1):
        draw.line(
            [trace.fixations[i].point, trace.fixations[i + 1].point],
            fill=LINE_COLOR,
            width=1,
        )
    for i, fix in enumerate(trace.fixations):
        x0, y0, x1, y1 = fix.extent
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=BOX_COLOR, width=1)
    for i, fix in enumerate(trace.fixations):
        x, y = fix.point
        draw.ellipse([x - 3, y - 3, x + 3, y + 3], fill=MARKER_COLOR)
        draw.text((x + 5, y - 11), str(i + 1), fill=LABEL_COLOR)
    return np.asarray(img)


def write_csv(path, rows, header_comments=()):
    """Write CSV rows with optional `# key=value` header comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(row)


def load_feature_sidecar(directory):
    """Read `features.txt` metadata from a feature-map directory.

    Returns a dict with spatial_scale (default 1.0) and source_tag
    (default ""); missing sidecar yields the defaults.
    """
    meta = {"spatial_scale": 1.0, "source_tag": ""}
    sidecar = Path(directory) / "features.txt"
    if not sidecar.exists():
        return meta
    for rawline in sidecar.read_text().splitlines():
        line = rawline.strip()
        if not line.startswith("#"):
            continue
        body = line.lstrip("#").strip()
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key == "spatial_scale" and value:
            meta["spatial_scale"] = float(value)
        elif key == "source_tag" and value:
            meta["source_tag"] = value
    return meta
