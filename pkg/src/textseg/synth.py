"""Synthetic sign benchmark: corpus generator and evaluation harness.

Each image carries one sign (a filled convex quad) on a flat, gradient or
noisy background, with glyphs drawn as random polyline strokes in a
contrasting color.  Strokes rather than fonts keep the benchmark script
agnostic.  The generator is a deterministic function of its seed, and the
manifest records the exact sign polygon as ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import Image, InputError, save_png
from .pipeline import DetectionResult
from .shape import polygon_iou, rasterize_polygon

BACKGROUNDS = ("flat", "gradient", "noise")

# Default rendering regime; chosen so the pipeline's statistics behave on
# the corpus (noisy-but-flat background, sign large enough for coarse
# tiling, glyphs well clear of the sign border).
DEFAULT_SIZE = (1024, 768)
DEFAULT_NOISE_SIGMA = 26.0
GLYPH_MARGIN = 76
STROKE_WIDTH_RANGE = (9, 15)


@dataclass(frozen=True)
class SynthSpec:
    """Full description of one synthetic image."""

    width: int
    height: int
    background: str
    noise_sigma: float
    sign_quad: tuple[tuple[int, int], ...]
    sign_fill: tuple[int, int, int]
    glyph_count: int
    stroke_width_range: tuple[int, int]
    contrast: float
    seed: int

    def __post_init__(self) -> None:
        if self.background not in BACKGROUNDS:
            raise InputError(f"unknown background type {self.background!r}")
        if len(self.sign_quad) != 4:
            raise InputError("sign quad must have exactly 4 corners")
        for x, y in self.sign_quad:
            if not (0 <= x <= self.width and 0 <= y <= self.height):
                raise InputError(f"sign corner {(x, y)} outside the image")
        lo, hi = self.stroke_width_range
        if not (1 <= lo <= hi):
            raise InputError(f"bad stroke width range {self.stroke_width_range}")
        if self.glyph_count < 0:
            raise InputError("glyph count must be >= 0")
        if not (0.0 <= self.contrast <= 442.0):
            raise InputError(f"contrast request out of range: {self.contrast}")


@dataclass(frozen=True)
class GroundTruth:
    """Exact sign polygon plus generation metadata for one image."""

    sign: tuple[tuple[int, int], ...]
    seed: int
    contrast: float
    background: str
    negative: bool


def glyph_color_for(
    fill: tuple[int, int, int], contrast: float
) -> tuple[int, int, int]:
    """Color at the requested RGB distance from the fill.

    Walks from the fill toward the farthest corner of the RGB cube, so a
    white fill with the maximum request lands exactly on black.  Requests
    beyond the reachable distance clamp to that corner.
    """
    corner = np.array([0 if c >= 128 else 255 for c in fill], dtype=np.float64)
    fill_v = np.array(fill, dtype=np.float64)
    diff = corner - fill_v
    reach = math.sqrt(float((diff * diff).sum()))
    if reach == 0.0:
        return tuple(int(c) for c in corner)
    t = min(1.0, contrast / reach)
    target = np.rint(fill_v + t * diff).clip(0, 255)
    return (int(target[0]), int(target[1]), int(target[2]))


def _stamp_capsule(
    canvas: np.ndarray, p0: tuple[float, float], p1: tuple[float, float],
    radius: float, color: tuple[int, int, int],
) -> None:
    """Paint all pixels within radius of the segment p0-p1."""
    h, w = canvas.shape[:2]
    x1, y1 = p0
    x2, y2 = p1
    c0 = max(0, int(math.floor(min(x1, x2) - radius - 1)))
    c1 = min(w, int(math.ceil(max(x1, x2) + radius + 1)))
    r0 = max(0, int(math.floor(min(y1, y2) - radius - 1)))
    r1 = min(h, int(math.ceil(max(y1, y2) + radius + 1)))
    if c0 >= c1 or r0 >= r1:
        return
    gx, gy = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
    ex, ey = x2 - x1, y2 - y1
    ee = ex * ex + ey * ey
    if ee == 0:
        d2 = (gx - x1) ** 2 + (gy - y1) ** 2
    else:
        t = np.clip(((gx - x1) * ex + (gy - y1) * ey) / ee, 0.0, 1.0)
        d2 = (gx - (x1 + t * ex)) ** 2 + (gy - (y1 + t * ey)) ** 2
    sel = d2 <= radius * radius
    canvas[r0:r1, c0:c1][sel] = color


def _render_background(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    w, h = spec.width, spec.height
    fill = np.array(spec.sign_fill, dtype=np.float64)
    # Base color kept well away from the sign fill so the sign boundary is real.
    while True:
        base = rng.integers(20, 236, size=3).astype(np.float64)
        if math.sqrt(float(((base - fill) ** 2).sum())) >= 120.0:
            break
    if spec.background == "flat":
        return np.broadcast_to(np.rint(base).astype(np.uint8), (h, w, 3)).copy()
    if spec.background == "gradient":
        while True:
            other = rng.integers(20, 236, size=3).astype(np.float64)
            if math.sqrt(float(((other - fill) ** 2).sum())) >= 120.0:
                break
        axis = int(rng.integers(0, 2))
        n = w if axis == 0 else h
        ramp = np.linspace(0.0, 1.0, n)[:, None] * (other - base) + base
        if axis == 0:
            grad = np.broadcast_to(ramp[None, :, :], (h, w, 3))
        else:
            grad = np.broadcast_to(ramp[:, None, :], (h, w, 3))
        return np.rint(grad).clip(0, 255).astype(np.uint8)
    noise = rng.normal(0.0, spec.noise_sigma, size=(h, w, 3))
    return np.rint(base + noise).clip(0, 255).astype(np.uint8)


def _glyph_box(spec: SynthSpec) -> tuple[int, int, int, int]:
    """Axis-aligned box inside the sign quad, inset by the glyph margin."""
    xs = [p[0] for p in spec.sign_quad]
    ys = [p[1] for p in spec.sign_quad]
    # The quad is a jittered rectangle; insetting its bounding box by the
    # margin (which exceeds the jitter) stays inside the quad.
    x0, x1 = min(xs) + GLYPH_MARGIN, max(xs) - GLYPH_MARGIN
    y0, y1 = min(ys) + GLYPH_MARGIN, max(ys) - GLYPH_MARGIN
    if x1 - x0 < 40 or y1 - y0 < 40:
        raise InputError("sign too small for glyphs at the configured margin")
    return x0, y0, x1, y1


def generate(spec: SynthSpec) -> tuple[Image, GroundTruth]:
    """Render one synthetic image; bit-identical for identical specs."""
    rng = np.random.default_rng(spec.seed)
    canvas = _render_background(spec, rng)

    quad = [(float(x), float(y)) for x, y in spec.sign_quad]
    sign_mask = rasterize_polygon(quad, (0.0, 0.0), canvas.shape[:2], 1.0)
    canvas[sign_mask] = spec.sign_fill

    if spec.glyph_count > 0:
        color = glyph_color_for(spec.sign_fill, spec.contrast)
        x0, y0, x1, y1 = _glyph_box(spec)
        lo, hi = spec.stroke_width_range
        # One wiggly stroke per "text line", spanning the full glyph box so
        # every coarse tile inside the sign sees some stroke pixels.
        pitch = (y1 - y0) / spec.glyph_count
        for line in range(spec.glyph_count):
            cy = y0 + (line + 0.5) * pitch
            npts = int(rng.integers(7, 12))
            px = np.linspace(x0, x1, npts) + rng.uniform(-8, 8, size=npts)
            px = px.clip(x0, x1)
            py = cy + rng.uniform(-0.18, 0.18, size=npts) * pitch
            width = int(rng.integers(lo, hi + 1))
            for i in range(npts - 1):
                _stamp_capsule(canvas, (px[i], py[i]), (px[i + 1], py[i + 1]),
                               width / 2.0, color)

    truth = GroundTruth(
        sign=tuple(spec.sign_quad),
        seed=spec.seed,
        contrast=spec.contrast,
        background=spec.background,
        negative=spec.glyph_count == 0,
    )
    return Image(canvas), truth


def random_spec(
    base_seed: int,
    index: int,
    *,
    size: tuple[int, int] = DEFAULT_SIZE,
    contrast: float = 200.0,
    background: str = "noise",
    negative: bool = False,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> SynthSpec:
    """Sample sign geometry and colors for corpus image ``index``."""
    seed = base_seed * 100000 + index
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7311]))
    w, h = size
    sw = int(rng.integers(int(0.52 * w), int(0.68 * w)))
    sh = int(rng.integers(int(0.52 * h), int(0.66 * h)))
    x0 = int(rng.integers(8, w - sw - 8))
    y0 = int(rng.integers(8, h - sh - 8))
    corners = np.array(
        [(x0, y0), (x0 + sw, y0), (x0 + sw, y0 + sh), (x0, y0 + sh)], dtype=np.int64
    )
    corners += rng.integers(-6, 7, size=(4, 2))
    if rng.integers(0, 2) == 0:
        fill = tuple(int(v) for v in rng.integers(150, 236, size=3))
    else:
        fill = tuple(int(v) for v in rng.integers(20, 96, size=3))
    box_height = sh - 2 * (GLYPH_MARGIN + 6)
    glyphs = 0 if negative else max(2, box_height // int(rng.integers(100, 131)))
    return SynthSpec(
        width=w,
        height=h,
        background=background,
        noise_sigma=noise_sigma,
        sign_quad=tuple((int(x), int(y)) for x, y in corners),
        sign_fill=fill,
        glyph_count=glyphs,
        stroke_width_range=STROKE_WIDTH_RANGE,
        contrast=float(contrast),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------

def write_corpus(
    out_dir: str | Path,
    count: int,
    seed: int,
    *,
    contrast: float = 200.0,
    background: str = "noise",
    negatives: int = 0,
) -> dict:
    """Generate PNGs plus a manifest.json; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count + negatives):
        spec = random_spec(
            seed, i, contrast=contrast, background=background, negative=i >= count
        )
        img, truth = generate(spec)
        name = f"synth_{spec.seed:08d}.png"
        save_png(img, out / name)
        entries.append(
            {
                "file": name,
                "seed": spec.seed,
                "negative": truth.negative,
                "sign": [[int(x), int(y)] for x, y in truth.sign],
            }
        )
    manifest = {
        "size": [DEFAULT_SIZE[0], DEFAULT_SIZE[1]],
        "base_seed": seed,
        "contrast": contrast,
        "background": background,
        "images": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def load_truths(corpus_dir: str | Path) -> dict[str, GroundTruth]:
    """Ground truths keyed by image filename, from a corpus manifest."""
    path = Path(corpus_dir) / "manifest.json"
    try:
        manifest = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise InputError(f"no manifest.json in {corpus_dir}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"bad manifest in {corpus_dir}: {exc}") from exc
    truths = {}
    for entry in manifest["images"]:
        truths[entry["file"]] = GroundTruth(
            sign=tuple((int(x), int(y)) for x, y in entry["sign"]),
            seed=int(entry["seed"]),
            contrast=float(manifest["contrast"]),
            background=str(manifest["background"]),
            negative=bool(entry["negative"]),
        )
    return truths


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageEval:
    file: str
    matched: bool
    best_iou: float
    false_positives: int


@dataclass(frozen=True)
class EvalReport:
    """Per-image matching against ground truth plus corpus aggregates.

    An image is matched when some detection hull reaches IoU >= 0.5 with
    the truth polygon; detections with IoU < 0.1 count as false positives.
    """

    recall: float
    fp_image_rate: float
    per_image: tuple[ImageEval, ...]

    def to_json_dict(self) -> dict:
        return {
            "recall": round(self.recall, 4),
            "fp_image_rate": round(self.fp_image_rate, 4),
            "per_image": [
                {
                    "file": e.file,
                    "matched": e.matched,
                    "best_iou": round(e.best_iou, 4),
                    "false_positives": e.false_positives,
                }
                for e in self.per_image
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def evaluate(
    results: Mapping[str, DetectionResult], truths: Mapping[str, GroundTruth]
) -> EvalReport:
    """Score detection results against ground truths paired by filename."""
    missing = sorted(set(truths) - set(results))
    extra = sorted(set(results) - set(truths))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"images without results: {', '.join(missing)}")
        if extra:
            parts.append(f"results without images: {', '.join(extra)}")
        raise InputError("unpaired files: " + "; ".join(parts))

    per_image = []
    matched_count = 0
    fp_images = 0
    for name in sorted(truths):
        truth = truths[name]
        ious = [
            polygon_iou(det.hull, truth.sign) for det in results[name].detections
        ]
        best = max(ious, default=0.0)
        matched = best >= 0.5
        fps = sum(1 for v in ious if v < 0.1)
        matched_count += matched
        fp_images += fps > 0
        per_image.append(ImageEval(name, matched, best, fps))
    total = len(per_image)
    return EvalReport(
        recall=matched_count / total if total else 0.0,
        fp_image_rate=fp_images / total if total else 0.0,
        per_image=tuple(per_image),
    )
