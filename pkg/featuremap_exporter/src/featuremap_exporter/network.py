"""VGG16 feature extraction: layer table, truncation, weight loading.

Every convolutional layer of the 16-layer network is addressable by its
conventional name (conv1_1 .. conv5_3). A truncated extractor ends right
after the named convolution's in-place ReLU -- that activated output is
the feature map the rest of the stack sees -- so the default layer,
conv5_3, yields the 512 maps produced just before the final max-pooling.
"""

from dataclasses import dataclass

import torch
from torch import nn
from torchvision import models

# name -> index of the Conv2d module inside vgg16().features
CONV_LAYERS = {
    "conv1_1": 0, "conv1_2": 2,
    "conv2_1": 5, "conv2_2": 7,
    "conv3_1": 10, "conv3_2": 12, "conv3_3": 14,
    "conv4_1": 17, "conv4_2": 19, "conv4_3": 21,
    "conv5_1": 24, "conv5_2": 26, "conv5_3": 28,
}
DEFAULT_LAYER = "conv5_3"

# cumulative pooling factor entering each block, and its channel width
LAYER_STRIDE = {name: 2 ** int(name[4]) // 2 for name in CONV_LAYERS}
BLOCK_CHANNELS = {"1": 64, "2": 128, "3": 256, "4": 512, "5": 512}

PRETRAINED_HINT = (
    "pretrained weights are not cached locally and could not be downloaded. "
    "Fetch the torchvision VGG16 checkpoint (vgg16-397923af.pth) on a "
    "machine with access to download.pytorch.org and pass it via "
    "--weights /path/to/vgg16-397923af.pth, or use --weights random for "
    "an architecture-only run."
)


@dataclass(frozen=True)
class LayerInfo:
    """Resolved layer selector: module index, channel count, stride."""

    name: str
    conv_index: int
    channels: int
    stride: int


def resolve_layer(name):
    """Map a layer name to its LayerInfo; non-conv selectors are rejected."""
    if name not in CONV_LAYERS:
        known = ", ".join(sorted(CONV_LAYERS))
        raise ValueError(
            f"layer {name!r} is not a convolutional layer (choose from {known})"
        )
    return LayerInfo(
        name=name,
        conv_index=CONV_LAYERS[name],
        channels=BLOCK_CHANNELS[name[4]],
        stride=LAYER_STRIDE[name],
    )


def load_network(weights="pretrained", seed=0):
    """Build the full VGG16 feature column with the requested weights.

    ``weights`` is "pretrained" (torchvision's ImageNet checkpoint, which
    must already be cached or downloadable), a path to a local state
    dict, or "random" (default initialization under ``seed``, for runs
    where only the tensor contract matters, not the learned features).
    """
    if weights == "random":
        torch.manual_seed(seed)
        return models.vgg16(weights=None).features
    if weights == "pretrained":
        try:
            return models.vgg16(weights=models.VGG16_Weights.IMAGENET1K_V1).features
        except Exception as exc:
            raise RuntimeError(PRETRAINED_HINT) from exc
    state = torch.load(weights, map_location="cpu", weights_only=True)
    model = models.vgg16(weights=None)
    model.load_state_dict(state)
    return model.features


def truncate(features, layer):
    """Cut the feature column just after `layer`'s ReLU, in eval mode."""
    head = nn.Sequential(*list(features.children())[: layer.conv_index + 2])
    head.eval()
    for p in head.parameters():
        p.requires_grad_(False)
    return head
