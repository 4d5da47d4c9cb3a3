"""Batch export of feature-map tensors with a metadata sidecar."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from featuremap_exporter import network
from featuremap_exporter.tensorfile import write_tensor

INPUT_SIDE = 224
MEAN = (0.485, 0.456, 0.406)
STD = (0.229, 0.224, 0.225)


@dataclass
class ExportSpec:
    """One export run: images in, one tensor file per image out."""

    images: list
    out_dir: Path
    layer: str = network.DEFAULT_LAYER
    weights: str = "pretrained"
    seed: int = 0

    def __post_init__(self):
        self.images = [Path(p) for p in self.images]
        self.out_dir = Path(self.out_dir)
        if not self.images:
            raise ValueError("image list is empty")
        for p in self.images:
            if not p.is_file():
                raise FileNotFoundError(f"input image not found: {p}")


def preprocess(path):
    """Load an image to the network's fixed input tensor.

    Decode to 8-bit sRGB, bilinear-resize to 224x224, scale to [0, 1],
    then channel-normalize -- the recipe recorded in the sidecar.
    """
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((INPUT_SIDE, INPUT_SIDE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(MEAN, dtype=np.float32)) / np.asarray(STD, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1)).unsqueeze(0)


def export(spec):
    """Run the truncated network over every image and dump tensor files.

    Inference is forced single-threaded on CPU with gradients off, so a
    given (image, weights, layer) triple always produces identical bytes.
    Returns the list of tensor-file paths, one per image in input order.
    """
    layer = network.resolve_layer(spec.layer)
    head = network.truncate(network.load_network(spec.weights, spec.seed), layer)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    written = []
    try:
        with torch.no_grad():
            for image in spec.images:
                maps = head(preprocess(image))[0].numpy()
                out = spec.out_dir / f"{image.stem}.gsal"
                write_tensor(out, maps)
                written.append(out)
    finally:
        torch.set_num_threads(n_threads)
    _write_sidecar(spec, layer, written)
    return written


def _write_sidecar(spec, layer, written):
    weights_tag = spec.weights
    if weights_tag not in ("pretrained", "random"):
        weights_tag = Path(spec.weights).name
    lines = [
        f"# spatial_scale={layer.stride}",
        f"# source_tag=vgg16:{layer.name}:{weights_tag}",
        f"# preprocess=rgb8;bilinear {INPUT_SIDE}x{INPUT_SIDE};/255;"
        f"mean {','.join(str(v) for v in MEAN)};std {','.join(str(v) for v in STD)}",
    ]
    for image, out in zip(spec.images, written):
        lines.append(f"{image.name}\t{out.name}")
    (spec.out_dir / "features.txt").write_text("\n".join(lines) + "\n")
