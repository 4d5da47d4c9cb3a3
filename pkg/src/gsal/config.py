"""Run configuration: one flat bundle covering kernels, pipeline,
engine, and foveation knobs, serialized as diffable key=value text.

The defaults reproduce the standard natural-image parameterization:
three-scale kernel stack (ring radii 13/25/38), alpha 5, working size
128x171, theta 0.2, up to 30 fixations.
"""

from dataclasses import dataclass, fields

from gsal.fixation import EngineConfig
from gsal.foveation import FoveationParams
from gsal.kernels import TORONTO_K, TORONTO_MU, stack_from_params


@dataclass
class RunConfig:
    k_values: tuple = TORONTO_K
    mu_values: tuple = TORONTO_MU
    support_radius: int = None
    alpha: float = 5.0
    center_sigma_frac: float = 0.25
    blur_sigma_base: float = 0.5
    resize_h: int = 128
    resize_w: int = 171
    stride: int = 1
    theta: float = 0.2
    max_fixations: int = 30
    path_kind: str = "zigzag"
    frame_count: int = 5
    frame_size: int = 16
    refine: bool = True
    foveate: bool = False
    resolution: float = 30.0
    fov_levels: int = 6
    fov_blur_side: int = 3
    fov_level_sigma: float = 0.2
    borji_splits: int = 100
    seed: int = 0

    def kernel_stack(self):
        return stack_from_params(self.k_values, self.mu_values, self.support_radius)

    def engine_config(self):
        return EngineConfig(
            theta=self.theta,
            max_fixations=self.max_fixations,
            path_kind=self.path_kind,
            frame_count=self.frame_count,
            frame_size=self.frame_size,
            foveate=self.foveate,
            refine=self.refine,
        )

    def foveation_params(self):
        return FoveationParams(
            resolution=self.resolution,
            levels=self.fov_levels,
            blur_kernel_side=self.fov_blur_side,
            level_sigma=self.fov_level_sigma,
        )


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_int_tuple(text):
    return tuple(int(v) for v in text.split(","))


def _parse_float_tuple(text):
    return tuple(float(v) for v in text.split(","))


def _parse_optional_int(text):
    return None if text.lower() == "none" else int(text)


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_PARSERS = {
    "k_values": _parse_int_tuple,
    "mu_values": _parse_float_tuple,
    "support_radius": _parse_optional_int,
    "alpha": float,
    "center_sigma_frac": float,
    "blur_sigma_base": float,
    "resize_h": _parse_optional_int,
    "resize_w": _parse_optional_int,
    "stride": int,
    "theta": float,
    "max_fixations": int,
    "path_kind": str,
    "frame_count": int,
    "frame_size": int,
    "refine": _parse_bool,
    "foveate": _parse_bool,
    "resolution": float,
    "fov_levels": int,
    "fov_blur_side": int,
    "fov_level_sigma": float,
    "borji_splits": int,
    "seed": int,
}


def dump_config(cfg, path=None):
    """Serialize a config to key=value text; optionally write it to path."""
    lines = [f"{f.name}={_format_value(getattr(cfg, f.name))}" for f in fields(cfg)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def load_config(path):
    """Parse a key=value config file back into a RunConfig.

    Omitted keys keep their defaults; unknown keys and malformed values
    raise. dump-then-load round-trips to an identical config.
    """
    values = {}
    with open(path) as fh:
        for lineno, rawline in enumerate(fh, start=1):
            line = rawline.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return RunConfig(**values)
