"""Command line front-end: detect, overlay, synth, eval."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import Config, Image, InputError, SelectionRule, load_image, save_png
from .pipeline import DetectionResult, detect
from .shape import outline_mask
from .synth import evaluate, load_truths, write_corpus

OUTLINE_COLOR = (255, 0, 0)


def _selection_rule(text: str) -> SelectionRule:
    try:
        return SelectionRule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    defaults = Config()
    p.add_argument("--min-block", type=int, default=defaults.min_block_size,
                   metavar="N", help="smallest block size, a power of two")
    p.add_argument("--color-merge-threshold", type=float,
                   default=defaults.color_merge_threshold, metavar="X",
                   help="RGB distance under which blocks/regions merge")
    p.add_argument("--peak-separation", type=float,
                   default=defaults.peak_separation_threshold, metavar="X",
                   help="minimum distance between gap color peaks to still merge")
    p.add_argument("--text-contrast", type=float,
                   default=defaults.text_contrast_threshold, metavar="X",
                   help="minimum background/foreground RGB distance for text")
    p.add_argument("--solidity", type=float, default=defaults.solidity_threshold,
                   metavar="X", help="solidity at or above which a hole-free region is dropped")
    p.add_argument("--min-text-fraction", type=float,
                   default=defaults.min_text_fraction, metavar="X",
                   help="minimum fraction of non-background pixels inside the hull")
    p.add_argument("--all-scales", action="store_true",
                   help="do not stop at the first detecting scale")
    p.add_argument("--selection-rule", type=_selection_rule,
                   default=Config().selection_rule, metavar="mean-std|pN",
                   help="uniform block selection rule (default: mean-std)")


def _config_from_args(args: argparse.Namespace) -> Config:
    return Config(
        min_block_size=args.min_block,
        color_merge_threshold=args.color_merge_threshold,
        peak_separation_threshold=args.peak_separation,
        text_contrast_threshold=args.text_contrast,
        solidity_threshold=args.solidity,
        min_text_fraction=args.min_text_fraction,
        stop_at_first_detection=not args.all_scales,
        selection_rule=args.selection_rule,
    )


def cmd_detect(args: argparse.Namespace) -> int:
    img = load_image(args.image)
    cfg = _config_from_args(args)
    result = detect(img, cfg, debug_dir=args.debug_dir)
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_overlay(args: argparse.Namespace) -> int:
    img = load_image(args.image)
    try:
        result = DetectionResult.from_json(Path(args.result).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"cannot read result file {args.result}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad result JSON {args.result}: {exc}") from exc
    if (result.width, result.height) != (img.width, img.height):
        raise InputError(
            f"result is for a {result.width}x{result.height} image but "
            f"{args.image} is {img.width}x{img.height}"
        )
    canvas = img.pixels.copy()
    for det in result.detections:
        mask = outline_mask(det.hull, canvas.shape[:2], thickness=3)
        canvas[mask] = OUTLINE_COLOR
    save_png(Image(canvas), args.out)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    manifest = write_corpus(
        args.out_dir,
        count=args.count,
        seed=args.seed,
        contrast=args.contrast,
        background=args.background,
        negatives=args.negatives,
    )
    print(json.dumps({
        "out_dir": str(args.out_dir),
        "images": len(manifest["images"]),
        "negatives": args.negatives,
    }))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    truths = load_truths(args.corpus)
    results_dir = Path(args.results)
    if not results_dir.is_dir():
        raise InputError(f"results directory {args.results} does not exist")
    results: dict[str, DetectionResult] = {}
    parsed_stems = set()
    for path in sorted(results_dir.glob("*.json")):
        try:
            results_key = path.stem
            parsed_stems.add(results_key)
            result = DetectionResult.from_json(path.read_text())
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad result JSON {path}: {exc}") from exc
        # pair result stem back to the image filename from the manifest
        match = [name for name in truths if Path(name).stem == results_key]
        if match:
            results[match[0]] = result
    orphans = sorted(parsed_stems - {Path(n).stem for n in truths})
    if orphans:
        raise InputError("results without images: " + ", ".join(orphans))
    report = evaluate(results, truths)
    print(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textseg",
        description="Find text areas in natural images by locating uniform "
                    "background regions with holes and testing their hulls for "
                    "contrasting content.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase diagnostic output on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect text areas in one image",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("image", help="input PNG or binary PPM")
    p.add_argument("--out", metavar="F.json", help="write result JSON here instead of stdout")
    p.add_argument("--debug-dir", metavar="DIR",
                   help="dump per-scale score maps, region maps and background masks")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("overlay", help="draw detection hulls onto the image")
    p.add_argument("image", help="input PNG or binary PPM")
    p.add_argument("result", help="detection result JSON for the same image")
    p.add_argument("--out", required=True, metavar="F.png", help="output PNG")
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--count", type=int, required=True, metavar="N",
                   help="number of positive images")
    p.add_argument("--seed", type=int, required=True, metavar="S")
    p.add_argument("--out-dir", required=True, metavar="D")
    p.add_argument("--contrast", type=float, default=200.0, metavar="X",
                   help="requested RGB distance between sign fill and glyphs")
    p.add_argument("--background", choices=("flat", "gradient", "noise"),
                   default="noise")
    p.add_argument("--negatives", type=int, default=0, metavar="M",
                   help="additional glyph-free images")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score detection results against a corpus")
    p.add_argument("--corpus", required=True, metavar="D",
                   help="corpus directory containing manifest.json")
    p.add_argument("--results", required=True, metavar="R",
                   help="directory of per-image detection JSON files")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
