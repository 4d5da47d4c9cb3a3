"""Command line for the exporter: `fmx export --images ... --out ...`."""

import argparse
import sys

from featuremap_exporter import network
from featuremap_exporter.exporter import ExportSpec, export


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fmx", description="export convolutional feature maps as tensor files"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="write one tensor file per input image")
    p.add_argument("--images", nargs="+", required=True, metavar="IMAGE")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--layer", default=network.DEFAULT_LAYER)
    p.add_argument(
        "--weights",
        default="pretrained",
        help="'pretrained', 'random', or a path to a VGG16 state dict",
    )
    p.add_argument("--seed", type=int, default=0, help="init seed for --weights random")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        spec = ExportSpec(
            images=args.images,
            out_dir=args.out,
            layer=args.layer,
            weights=args.weights,
            seed=args.seed,
        )
        written = export(spec)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    for path in written:
        print(path)
    return 0


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
