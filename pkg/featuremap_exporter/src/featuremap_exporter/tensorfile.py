"""Writer for the GSAL tensor-file byte layout.

The layout is the interchange contract with the saliency library: a
20-byte little-endian header (magic ``GSAL``, version u16, H u32, W u32,
N u32, dtype code u16 where 1 = float32) followed by the payload as
little-endian 32-bit floats, row-major, map index outermost. This module
implements the contract independently; the consumer's reader is the
cross-check.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"GSAL"
VERSION = 1
DTYPE_F32 = 1
HEADER = struct.Struct("<4sHIIIH")
MAX_ELEMENTS = 1 << 31


def write_tensor(path, array):
    """Write a (N, h, w) float array as a tensor file."""
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"expected a (N, h, w) array, got shape {arr.shape}")
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
        fh.write(HEADER.pack(MAGIC, VERSION, h, w, n, DTYPE_F32))
        fh.write(payload)
