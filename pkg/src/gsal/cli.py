"""The ``gsal`` command line: saliency maps, foveation, scanpaths,
top-down search, metric evaluation, and a stage benchmark.

Exit codes: 0 success, 2 usage errors (argparse), 3 missing input files,
4 validation failures, 1 anything unexpected.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from gsal import backend, dataio, metrics
from gsal.config import RunConfig, dump_config, load_config
from gsal.fixation import run_cycle
from gsal.foveation import FoveationParams, foveate
from gsal.kernels import stack_from_params
from gsal.saliency import (
    PostProcessParams,
    channel_saliency,
    compute_saliency,
    post_process,
    prepare_image,
    rgb_to_lab,
)
from gsal.topdown import FeatureMapStack, LabeledBox, learn_weights, search

METRIC_NAMES = ("judd", "borji", "sim", "cc", "nss")


def _out_path(args, name):
    p = Path(name)
    return p if p.is_absolute() else Path(args.out_dir) / p


def _load_run_config(path):
    return load_config(path) if path else RunConfig()


def _default_jobs():
    raw = os.environ.get("GSAL_JOBS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"GSAL_JOBS={raw!r} is not an integer") from None
    return 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_saliency(args):
    cfg = _load_run_config(args.params)
    image = dataio.load_image(args.input)
    smap = compute_saliency(image, cfg)
    if args.out_map:
        dataio.write_tensor(_out_path(args, args.out_map), smap.values)
    if args.out_png:
        dataio.save_image(_out_path(args, args.out_png), dataio.render_heatmap(smap))
    print(f"saliency map {smap.shape[1]}x{smap.shape[0]} max=1.0 done")
    return 0


def cmd_foveate(args):
    image = dataio.load_image(args.input)
    params = FoveationParams(
        resolution=args.resolution,
        levels=args.levels,
        blur_kernel_side=args.blur_side,
        level_sigma=args.level_sigma,
    )
    result = foveate(image, (args.x, args.y), params)
    dataio.save_image(_out_path(args, args.out), result.pixels)
    print(f"foveated at ({args.x}, {args.y}), resolution {args.resolution}")
    return 0


def cmd_scanpath(args):
    cfg = _load_run_config(args.config)
    image = dataio.load_image(args.input)
    result = run_cycle(image, cfg)
    trace = result.trace
    frame_shape = result.working_image.shape[:2]
    if args.out_trace:
        dataio.write_trace(_out_path(args, args.out_trace), trace, frame_shape)
    if args.out_frames:
        frames_dir = _out_path(args, args.out_frames)
        for i, detail in enumerate(result.details):
            for j, frame in enumerate(detail.scan.frames):
                dataio.save_image(frames_dir / f"fix{i:02d}_frame{j:02d}.png", frame)
    if args.annotated_png:
        annotated = dataio.render_trace(result.working_image, trace)
        dataio.save_image(_out_path(args, args.annotated_png), annotated)
    print(f"{len(trace.fixations)} fixations, stop: {trace.stop_reason}")
    return 0


def _feature_stack(tensor_path, spatial_scale, source_tag):
    maps = dataio.read_tensor(tensor_path)
    return FeatureMapStack(
        maps=maps.astype(np.float64), source_tag=source_tag, spatial_scale=spatial_scale
    )


def _sidecar_scale(args, features_dir):
    if args.spatial_scale is not None:
        return args.spatial_scale, ""
    meta = dataio.load_feature_sidecar(features_dir)
    return meta["spatial_scale"], meta["source_tag"]


def cmd_topdown_train(args):
    cfg = _load_run_config(args.params)
    manifest = dataio.load_manifest(args.manifest)
    scale, tag = _sidecar_scale(args, args.features_dir)
    kernel = cfg.kernel_stack()
    training = []
    for entry in manifest.entries:
        if not entry.boxes or entry.label is None:
            continue
        stack = _feature_stack(
            Path(args.features_dir) / f"{entry.image_id}.gsal", scale, tag
        )
        for box in entry.boxes:
            fbox = tuple(int(round(v / scale)) for v in box)
            training.append(
                (stack, LabeledBox(image_id=entry.image_id, class_id=entry.label, box=fbox))
            )
    if not training:
        raise ValueError("manifest holds no labeled boxes to train on")
    model = learn_weights(training, kernel, alpha=cfg.alpha)
    from gsal.topdown import save_model

    save_model(_out_path(args, args.out_model), model)
    print(f"trained {len(model.classes)} classes on {len(training)} boxes")
    for flag in model.training_flags:
        print(f"floored outside-saliency: {flag}")
    return 0


def cmd_topdown_search(args):
    from gsal.topdown import load_model

    cfg = _load_run_config(args.params)
    model = load_model(args.model)
    image = dataio.load_image(args.image)
    scale, tag = _sidecar_scale(args, Path(args.features).parent)
    stack = _feature_stack(args.features, scale, tag)
    target = None
    if args.target:
        target = tuple(int(v) for v in args.target.split(","))
        if len(target) != 4:
            raise ValueError(f"--target needs x0,y0,x1,y1, got {args.target!r}")
    result = search(image, stack, model, args.class_id, cfg, target_box=target)
    if args.out_trace:
        dataio.write_trace(_out_path(args, args.out_trace), result.trace)
    if args.annotated_png:
        h, w = result.trace.inhibition_map.shape
        from dataclasses import replace

        working = prepare_image(image, replace(cfg, resize_h=h, resize_w=w))
        annotated = dataio.render_trace(working, result.trace)
        dataio.save_image(_out_path(args, args.annotated_png), annotated)
    if target is not None:
        status = "found" if result.found else "not-found"
        print(f"saccades-to-target: {result.saccades} ({status})")
    print(f"{len(result.trace.fixations)} fixations, stop: {result.trace.stop_reason}")
    return 0


def _entry_scores(entry, args, manifest, metric_names):
    values = dataio.read_tensor(Path(args.maps_dir) / f"{entry.image_id}.gsal")
    smap = values[0].astype(np.float64)
    if entry.fixations is None:
        raise ValueError(f"{entry.image_id}: no fixation file in the manifest")
    from PIL import Image as PILImage

    with PILImage.open(entry.image) as img:
        img_w, img_h = img.size
    if smap.shape != (img_h, img_w):
        smap = np.maximum(backend.bilinear_resize(smap, img_h, img_w), 0.0)
    fix = dataio.read_fixations(entry.fixations, img_w, img_h, entry.image_id)
    sigma = args.sigma or metrics.density_sigma(img_h, img_w, manifest.px_per_degree)
    density = metrics.density_map(fix, sigma)
    flag = "degenerate" if metrics.is_degenerate(smap) else ""
    rows = []
    for name in metric_names:
        if name == "judd":
            value = metrics.auc_judd(smap, fix)
        elif name == "borji":
            value = metrics.auc_borji(smap, fix, n_splits=args.splits, seed=args.seed)
        elif name == "sim":
            value = metrics.similarity(smap, density)
        elif name == "cc":
            value = metrics.correlation(smap, density)
        elif name == "nss":
            value = metrics.nss(smap, fix)
        rows.append([entry.image_id, name, repr(value), flag])
    roc = None
    if args.out_roc:
        roc = metrics.roc_curve(smap, fix, mode="judd")
    return rows, roc, sigma


def cmd_eval(args):
    manifest = dataio.load_manifest(args.fixations)
    metric_names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for name in metric_names:
        if name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {name!r}; choose from {METRIC_NAMES}")
    entries = [e for e in manifest.entries]
    if not entries:
        raise ValueError("manifest is empty")
    jobs = args.jobs or _default_jobs()
    results = [None] * len(entries)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_entry_scores, e, args, manifest, metric_names)
                for e in entries
            ]
            results = [f.result() for f in futures]
    else:
        results = [_entry_scores(e, args, manifest, metric_names) for e in entries]

    sigma_used = results[0][2]
    header = [
        f"metrics={','.join(metric_names)}",
        f"density_sigma={sigma_used!r}",
        f"borji_splits={args.splits}",
        f"seed={args.seed}",
    ]
    rows = [["image_id", "metric", "value", "flags"]]
    for entry_rows, _, _ in results:
        rows.extend(entry_rows)
    if args.out_csv:
        dataio.write_csv(_out_path(args, args.out_csv), rows, header_comments=header)
    if args.out_roc:
        roc_dir = _out_path(args, args.out_roc)
        roc_dir.mkdir(parents=True, exist_ok=True)
        for entry, (_, roc, _) in zip(entries, results):
            lines = ["fpr\ttpr"] + [f"{float(fp)!r}\t{float(tp)!r}" for fp, tp in roc]
            (roc_dir / f"{entry.image_id}_roc.tsv").write_text("\n".join(lines) + "\n")
    means = {}
    for entry_rows, _, _ in results:
        for _, name, value, _ in entry_rows:
            means.setdefault(name, []).append(float(value))
    for name in metric_names:
        print(f"{name}: mean {np.mean(means[name]):.4f} over {len(means[name])} images")
    return 0


def cmd_bench(args):
    if args.reps < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = _load_run_config(args.config)
    if args.manifest:
        manifest = dataio.load_manifest(args.manifest)
        if not manifest.entries:
            raise ValueError("manifest is empty")
        image = dataio.load_image(manifest.entries[0].image)
    elif args.input:
        image = dataio.load_image(args.input)
    else:
        rng = np.random.default_rng(0)
        image = rng.integers(0, 256, size=(480, 640, 3), dtype=np.uint8)

    if args.backend == "both":
        names = ["numba", "numpy"] if backend.HAS_NUMBA else ["numpy"]
    else:
        names = [args.backend]

    stack = cfg.kernel_stack()
    rows = [["stage", "backend", "mean_s", "std_s", "reps"]]
    summary = []
    previous = backend.active_backend()
    try:
        for name in names:
            backend.set_backend(name)
            stage_times = {"colorspace": [], "convolution": [], "postprocess": []}
            for rep in range(args.reps + 1):  # first rep is the warmup
                t0 = time.perf_counter()
                working = prepare_image(image, cfg)
                lab = rgb_to_lab(working)
                t1 = time.perf_counter()
                raw = channel_saliency(lab, stack, stride=cfg.stride)
                t2 = time.perf_counter()
                params = PostProcessParams.for_shape(
                    lab.height,
                    lab.width,
                    alpha=cfg.alpha,
                    center_frac=cfg.center_sigma_frac,
                    blur_base=cfg.blur_sigma_base,
                )
                post_process(raw, params)
                t3 = time.perf_counter()
                if rep == 0:
                    continue
                stage_times["colorspace"].append(t1 - t0)
                stage_times["convolution"].append(t2 - t1)
                stage_times["postprocess"].append(t3 - t2)
            total = 0.0
            for stage, times in stage_times.items():
                rows.append(
                    [stage, name, repr(float(np.mean(times))), repr(float(np.std(times))), args.reps]
                )
                total += float(np.mean(times))
            rows.append(["total", name, repr(total), "", args.reps])
            summary.append((name, total))
    finally:
        backend.set_backend(previous)

    if args.out_csv:
        dataio.write_csv(
            _out_path(args, args.out_csv),
            rows,
            header_comments=[f"reps={args.reps}", "warmup=excluded"],
        )
    for name, total in summary:
        print(f"{name}: mean per-map time {total:.4f} s over {args.reps} reps")
    return 0


def cmd_config(args):
    cfg = _load_run_config(args.params)
    text = dump_config(cfg)
    if args.out:
        _out_path(args, args.out).parent.mkdir(parents=True, exist_ok=True)
        _out_path(args, args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gsal",
        description="Gamma-kernel visual saliency, foveation, and scanpath simulation",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("saliency", help="compute a bottom-up saliency map")
    p.add_argument("--input", required=True)
    p.add_argument("--params", help="key=value config file")
    p.add_argument("--out-map", help="tensor file for the map")
    p.add_argument("--out-png", help="heatmap image")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("foveate", help="render a foveated image")
    p.add_argument("--input", required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--resolution", type=float, required=True)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--blur-side", type=int, default=3)
    p.add_argument("--level-sigma", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_foveate)

    p = sub.add_parser("scanpath", help="simulate a fixation trace")
    p.add_argument("--input", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--out-trace")
    p.add_argument("--out-frames", help="directory for micro-scan frames")
    p.add_argument("--annotated-png")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_scanpath)

    p = sub.add_parser("topdown", help="class-conditioned saliency")
    tdsub = p.add_subparsers(dest="td_command")
    t = tdsub.add_parser("train", help="learn per-class feature weights")
    t.add_argument("--manifest", required=True)
    t.add_argument("--features-dir", required=True)
    t.add_argument("--out-model", required=True)
    t.add_argument("--params", help="config with the feature-grid kernel")
    t.add_argument("--spatial-scale", type=float)
    t.add_argument("--out-dir", default=".")
    t.set_defaults(func=cmd_topdown_train)
    s = tdsub.add_parser("search", help="guided search on one image")
    s.add_argument("--image", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--class", dest="class_id", required=True)
    s.add_argument("--target", help="x0,y0,x1,y1 evaluation box")
    s.add_argument("--out-trace")
    s.add_argument("--annotated-png")
    s.add_argument("--params")
    s.add_argument("--spatial-scale", type=float)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_topdown_search)

    p = sub.add_parser("eval", help="score maps against fixations")
    p.add_argument("--maps-dir", required=True)
    p.add_argument("--fixations", required=True, help="dataset manifest")
    p.add_argument("--metrics", default="judd,borji,sim,cc,nss")
    p.add_argument("--out-csv")
    p.add_argument("--out-roc", help="directory for per-image ROC tables")
    p.add_argument("--sigma", type=float, help="density blur override (px)")
    p.add_argument("--splits", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, help="parallel workers (default $GSAL_JOBS)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time the pipeline stages per backend")
    p.add_argument("--manifest")
    p.add_argument("--input")
    p.add_argument("--config")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument(
        "--backend",
        choices=["numba", "numpy", "both"],
        default="both" if backend.HAS_NUMBA else "numpy",
    )
    p.add_argument("--out-csv")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("config", help="print or write the effective config")
    p.add_argument("--params")
    p.add_argument("--out")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(file=sys.stderr)
        return 2
    try:
        return args.func(args) or 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
