"""Command-line driver: synth, segment, encode, decode, analyze.

Machine-readable results go to stdout as JSON; diagnostics go to
stderr.  Exit codes: 0 on success, 1 for data or pipeline failures, 2
for usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    band_statistics,
    compaction_curve,
    compaction_rows,
    correlation_rows,
    covariance_rows,
    log_variance_rows,
    mean_band_correlation,
    rate_allocation_report,
    write_csv,
)
from .codec import CodecConfig, decode_light_field, encode_light_field, learn_scan_order
from .errors import LfgtError
from .lightfield import (
    DISPARITY_NAME,
    DisparityMap,
    load_disparity,
    load_light_field,
    save_disparity,
    save_label_map,
    save_light_field,
)
from .pipeline import MODES, apply_forward, compute_bases, spatial_forward
from .segmentation import coherence, project_labels, slic_segment
from .synthetic import Background, Layer, SyntheticScene, render_synthetic

LABELS_NAME = "labels.pgm"


def _emit(payload: dict) -> None:
    print(json.dumps(_jsonable(payload), sort_keys=True, indent=2))


def _jsonable(value):
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if key == "psnr" and isinstance(item, float) and math.isinf(item):
                out["psnr"] = None
                out["lossless"] = True
                continue
            out[str(key)] = _jsonable(item)
        return out
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like 3x3")
    try:
        first, second = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"{what} must be two integers separated by x") from None
    if first < 1 or second < 1:
        raise ValueError(f"{what} must be positive")
    return first, second


def _parse_fields(text: str, what: str) -> dict:
    fields = {}
    if not text:
        return fields
    for item in text.split(","):
        key, eq, raw = item.partition("=")
        if not eq:
            raise ValueError(f"{what}: expected key=value, got {item!r}")
        fields[key.strip()] = raw.strip()
    return fields


def _parse_gradient(raw: str) -> tuple[float, float]:
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError("gradient must look like 0.3:-0.2")
    return float(parts[0]), float(parts[1])


def parse_layer(text: str) -> Layer:
    """DSL: ``disk:d=1,x=20,y=22,r=8[,lum=170][,grad=a:b][,noise=s]`` or
    ``rect:d=2,x=30,y=10,h=12,w=16[,...]``; x is the pixel row."""
    shape, _, rest = text.partition(":")
    shape = shape.strip()
    fields = _parse_fields(rest, f"layer {shape!r}")
    kwargs: dict = {"shape": shape, "disparity": float(fields.pop("d", 0.0))}
    if "lum" in fields:
        kwargs["luminance"] = float(fields.pop("lum"))
    if "grad" in fields:
        kwargs["gradient"] = _parse_gradient(fields.pop("grad"))
    if "noise" in fields:
        kwargs["noise_sigma"] = float(fields.pop("noise"))
    if shape == "disk":
        kwargs["center"] = (float(fields.pop("x", 0.0)), float(fields.pop("y", 0.0)))
        kwargs["radius"] = float(fields.pop("r", 0.0))
    elif shape == "rect":
        kwargs["top_left"] = (float(fields.pop("x", 0.0)), float(fields.pop("y", 0.0)))
        kwargs["size"] = (float(fields.pop("h", 0.0)), float(fields.pop("w", 0.0)))
    else:
        raise ValueError(f"unknown layer shape {shape!r}")
    if fields:
        raise ValueError(f"unknown layer keys: {sorted(fields)}")
    return Layer(**kwargs)


def parse_background(text: str) -> Background:
    fields = _parse_fields(text, "background")
    kwargs: dict = {}
    if "d" in fields:
        kwargs["disparity"] = float(fields.pop("d"))
    if "lum" in fields:
        kwargs["luminance"] = float(fields.pop("lum"))
    if "grad" in fields:
        kwargs["gradient"] = _parse_gradient(fields.pop("grad"))
    if "noise" in fields:
        kwargs["noise_sigma"] = float(fields.pop("noise"))
    if fields:
        raise ValueError(f"unknown background keys: {sorted(fields)}")
    return Background(**kwargs)


def _config_from_args(args) -> CodecConfig:
    return CodecConfig(
        mode=args.mode,
        k=args.k,
        compactness=args.compactness,
        alpha=args.alpha,
        k_block=args.k_block,
        lam=args.lam,
        threshold=args.threshold,
        min_obs=args.min_obs,
        class_search_descending=args.class_search == "descending",
        threads=args.threads,
    )


def _add_codec_flags(sub) -> None:
    sub.add_argument("--mode", choices=MODES, default="separable")
    sub.add_argument("--k", type=int, default=64, help="super-pixel budget")
    sub.add_argument("--compactness", type=float, default=10.0)
    sub.add_argument("--alpha", type=float, default=1.0, help="alignment weight")
    sub.add_argument("--k-block", type=int, default=10, dest="k_block")
    sub.add_argument("--lambda", type=float, default=0.1, dest="lam", help="rate knob")
    sub.add_argument("--threshold", type=float, default=1.0, help="class energy gate")
    sub.add_argument("--min-obs", type=int, default=2, dest="min_obs")
    sub.add_argument(
        "--class-search",
        choices=("descending", "ascending"),
        default="descending",
        dest="class_search",
    )
    sub.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfgt",
        description="Light field compression with graph transforms over super-rays.",
    )
    parser.add_argument(
        "--config",
        default=None,
        help="JSON file of flag defaults; explicit flags override it",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="render a layered synthetic scene")
    synth.add_argument("--views", default="3x3", help="angular grid, e.g. 3x3")
    synth.add_argument("--size", default="64x64", help="view size as WIDTHxHEIGHT")
    synth.add_argument("--background", default="", help="e.g. d=0,lum=96,noise=5")
    synth.add_argument(
        "--layers",
        nargs="*",
        default=[],
        help="layer specs, e.g. disk:d=1,x=20,y=22,r=8",
    )
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", required=True)

    segment = commands.add_parser("segment", help="super-ray segmentation only")
    segment.add_argument("--input", required=True, help="light field directory")
    segment.add_argument("--k", type=int, default=64)
    segment.add_argument("--compactness", type=float, default=10.0)
    segment.add_argument("--output", default=None, help="directory for label maps")

    encode = commands.add_parser("encode", help="compress a light field directory")
    encode.add_argument("--input", required=True)
    encode.add_argument("--output", required=True, help="bitstream file")
    _add_codec_flags(encode)

    decode = commands.add_parser("decode", help="decompress a bitstream")
    decode.add_argument("--input", required=True, help="bitstream file")
    decode.add_argument("--output", required=True, help="light field directory")

    analyze = commands.add_parser("analyze", help="emit evaluation CSV/JSON files")
    analyze.add_argument("--input", required=True, help="light field directory")
    analyze.add_argument("--output", required=True, help="report directory")
    analyze.add_argument("--bitstream", default=None, help="stream for rate report")
    analyze.add_argument(
        "--compare-coupling",
        action="store_true",
        dest="compare_coupling",
        help="also run the coupled transform and emit a comparison file",
    )
    _add_codec_flags(analyze)
    parser.sub_map = {
        "synth": synth,
        "segment": segment,
        "encode": encode,
        "decode": decode,
        "analyze": analyze,
    }
    for sub in parser.sub_map.values():
        sub.add_argument("--config", default=None, help=argparse.SUPPRESS)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pre-scan for --config and fold the file's values in as defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return argv
    try:
        loaded = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"unreadable config file: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ValueError("config file must hold a JSON object")
    renames = {"lambda": "lam"}
    defaults = {renames.get(key, key): value for key, value in loaded.items()}
    all_dests: set[str] = set()
    for sub in parser.sub_map.values():
        known_dests = {action.dest for action in sub._actions}
        all_dests |= known_dests
        sub.set_defaults(**{k: v for k, v in defaults.items() if k in known_dests})
    unknown = sorted(set(defaults) - all_dests)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    return argv


def _load_input(directory: Path):
    lf = load_light_field(directory)
    disparity_path = directory / DISPARITY_NAME
    if not disparity_path.exists():
        raise LfgtError(f"missing disparity map: {disparity_path}")
    disparity = load_disparity(disparity_path)
    if disparity.values.shape != (lf.height, lf.width):
        raise LfgtError("disparity map does not match the view size")
    return lf, disparity


def _cmd_synth(args) -> int:
    n_u, n_v = _parse_pair(args.views, "--views")
    width, height = _parse_pair(args.size, "--size")
    scene = SyntheticScene(
        background=parse_background(args.background),
        layers=tuple(parse_layer(text) for text in args.layers),
        seed=args.seed,
    )
    lf, disparity, labels = render_synthetic(scene, n_u, n_v, width, height)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    save_light_field(lf, out)
    save_disparity(out / DISPARITY_NAME, disparity)
    save_label_map(out / LABELS_NAME, labels)
    _emit(
        {
            "output": str(out),
            "views": n_u * n_v,
            "width": width,
            "height": height,
            "layers": len(scene.layers),
            "seed": args.seed,
        }
    )
    return 0


def _cmd_segment(args) -> int:
    lf, disparity = _load_input(Path(args.input))
    sp = slic_segment(lf.view(0, 0), args.k, args.compactness)
    seg = project_labels(sp, disparity, lf.n_u, lf.n_v)
    report = coherence(seg)
    if args.output is not None:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for u in range(lf.n_u):
            for v in range(lf.n_v):
                save_label_map(out / f"labels_{u}_{v}.pgm", seg.label_maps[u, v])
        (out / "medians.json").write_text(
            json.dumps(seg.median_disparity.tolist()) + "\n"
        )
    _emit(
        {
            "super_rays": int(seg.k),
            "coherent": int(report.coherent.sum()),
            "cons_percent": report.cons_percent,
        }
    )
    return 0


def _cmd_encode(args) -> int:
    lf, disparity = _load_input(Path(args.input))
    config = _config_from_args(args)
    stream, stats = encode_light_field(lf, disparity, config)
    Path(args.output).write_bytes(stream)
    _emit(stats)
    return 0


def _cmd_decode(args) -> int:
    path = Path(args.input)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise LfgtError(f"unreadable bitstream: {exc}") from exc
    lf, info = decode_light_field(data)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    save_light_field(lf, out)
    _emit(info)
    return 0


def _cmd_analyze(args) -> int:
    lf, disparity = _load_input(Path(args.input))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    config = _config_from_args(args)

    sp = slic_segment(lf.view(0, 0), config.k, config.compactness)
    seg = project_labels(sp, disparity, lf.n_u, lf.n_v)
    report = coherence(seg)

    alpha32 = float(np.float32(config.alpha))
    bases = compute_bases(
        seg, config.mode, alpha=alpha32, k_block=config.k_block, threads=config.threads
    )
    tensor = apply_forward(lf, seg, bases)
    scan = learn_scan_order([tensor], config.min_obs)
    scan_curve = compaction_curve(tensor, scan)
    band_curve = compaction_curve(tensor)
    spectra = spatial_forward(lf, seg, bases)
    stats = band_statistics(spectra, tensor, seg.n_views)

    write_csv(
        out / "compaction_scan.csv",
        ["index", "fraction_kept", "fraction_energy"],
        compaction_rows(scan_curve),
    )
    write_csv(
        out / "compaction_band.csv",
        ["index", "fraction_kept", "fraction_energy"],
        compaction_rows(band_curve),
    )
    write_csv(
        out / "band_correlations.csv",
        ["band", "view_i", "view_j", "correlation"],
        correlation_rows(stats),
    )
    write_csv(
        out / "band_covariance.csv",
        ["band_i", "band_j", "covariance", "log10_abs"],
        covariance_rows(stats),
    )
    write_csv(
        out / "angular_log_variance.csv",
        ["band", "angular_index", "log10_variance"],
        log_variance_rows(stats),
    )

    summary = {
        "mode": config.mode,
        "super_rays": int(seg.k),
        "cons_percent": report.cons_percent,
        "coherent": int(report.coherent.sum()),
        "coefficients": tensor.total_count(),
        "output": str(out),
    }

    if args.compare_coupling:
        coupled_bases = compute_bases(
            seg,
            "separable-opt",
            alpha=alpha32,
            k_block=config.k_block,
            threads=config.threads,
        )
        coupled_tensor = apply_forward(lf, seg, coupled_bases)
        coupled_scan = learn_scan_order([coupled_tensor], config.min_obs)
        coupled_curve = compaction_curve(coupled_tensor, coupled_scan)
        coupled_stats = band_statistics(
            spatial_forward(lf, seg, coupled_bases), coupled_tensor, seg.n_views
        )
        low_bands = range(1, 6)
        rows = [
            (
                "mean_abs_corr_bands_1_5",
                mean_band_correlation(stats, low_bands),
                mean_band_correlation(coupled_stats, low_bands),
            ),
            (
                "energy_at_10_percent",
                scan_curve.energy_at(0.10),
                coupled_curve.energy_at(0.10),
            ),
            (
                "energy_at_25_percent",
                scan_curve.energy_at(0.25),
                coupled_curve.energy_at(0.25),
            ),
        ]
        write_csv(
            out / "coupling_comparison.csv",
            ["metric", "plain", "coupled"],
            rows,
        )
        summary["coupling_comparison"] = str(out / "coupling_comparison.csv")

    if args.bitstream is not None:
        try:
            data = Path(args.bitstream).read_bytes()
        except OSError as exc:
            raise LfgtError(f"unreadable bitstream: {exc}") from exc
        rate = rate_allocation_report(data, lf)
        (out / "rate_allocation.json").write_text(
            json.dumps(_jsonable(rate), sort_keys=True, indent=2) + "\n"
        )
        summary["rate_allocation"] = str(out / "rate_allocation.json")

    _emit(summary)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "segment": _cmd_segment,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LfgtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
