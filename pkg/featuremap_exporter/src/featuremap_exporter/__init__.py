"""Feature-map exporter: VGG16 activations as GSAL tensor files."""

from featuremap_exporter.exporter import ExportSpec, export
from featuremap_exporter.network import CONV_LAYERS, DEFAULT_LAYER, resolve_layer
from featuremap_exporter.tensorfile import write_tensor

__all__ = [
    "CONV_LAYERS",
    "DEFAULT_LAYER",
    "ExportSpec",
    "export",
    "resolve_layer",
    "write_tensor",
]
