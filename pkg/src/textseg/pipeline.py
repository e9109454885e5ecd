"""The coarse-to-fine detection driver.

At each scale the image is tiled, blocks are scored and the uniform ones
selected, grouped and merged into regions; regions passing the shape test
have the interior of their convex hull checked for text.  When nothing is
found the block size is halved and everything reruns, down to the minimum
block size.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .core import ColorVec, Config, Image
from .regions import group_connected, merge_regions, save_region_map
from .shape import ShapeVerdict, RegionMask, polygon_iou, region_hull, shape_test
from .textcheck import TextVerdict, analyze_candidate, save_background_mask, text_presence
from .uniformity import compute_block_grid, save_score_heatmap, select_uniform_blocks

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Detection:
    """One accepted text area."""

    scale: int
    hull: tuple[tuple[int, int], ...]
    bg_color: ColorVec
    fg_color: ColorVec
    contrast: float
    text_fraction: float


@dataclass(frozen=True)
class DetectionResult:
    width: int
    height: int
    config: Config
    scales_visited: tuple[int, ...]
    detections: tuple[Detection, ...]

    def to_json_dict(self) -> dict:
        return {
            "image": {"width": self.width, "height": self.height},
            "config": self.config.to_json_dict(),
            "scales_visited": list(self.scales_visited),
            "detections": [
                {
                    "scale": d.scale,
                    "hull": [[int(x), int(y)] for x, y in d.hull],
                    "bg_color": [round(c, 4) for c in d.bg_color.as_tuple()],
                    "fg_color": [round(c, 4) for c in d.fg_color.as_tuple()],
                    "contrast": round(d.contrast, 4),
                    "text_fraction": round(d.text_fraction, 4),
                }
                for d in self.detections
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, d: dict) -> "DetectionResult":
        detections = tuple(
            Detection(
                scale=int(det["scale"]),
                hull=tuple((int(x), int(y)) for x, y in det["hull"]),
                bg_color=ColorVec.from_sequence(det["bg_color"]),
                fg_color=ColorVec.from_sequence(det["fg_color"]),
                contrast=float(det["contrast"]),
                text_fraction=float(det["text_fraction"]),
            )
            for det in d["detections"]
        )
        return cls(
            width=int(d["image"]["width"]),
            height=int(d["image"]["height"]),
            config=Config.from_json_dict(d["config"]),
            scales_visited=tuple(int(s) for s in d["scales_visited"]),
            detections=detections,
        )

    @classmethod
    def from_json(cls, text: str) -> "DetectionResult":
        return cls.from_json_dict(json.loads(text))


def initial_block_size(img: Image, cfg: Config) -> int:
    """Largest power of two at most a quarter of the shorter image side,
    floored at cfg.min_block_size."""
    m = 2 * cfg.min_block_size
    if img.width < m or img.height < m:
        raise ValueError(
            f"image {img.width}x{img.height} is smaller than twice the minimum "
            f"block size ({cfg.min_block_size})"
        )
    target = min(img.width, img.height) // 4
    size = 1 << max(0, target.bit_length() - 1)
    return max(size, cfg.min_block_size)


def _detect_at_scale(
    img: Image, size: int, cfg: Config, debug_dir: Path | None
) -> list[Detection]:
    grid = compute_block_grid(img, size)
    if debug_dir is not None:
        save_score_heatmap(grid, debug_dir / f"scores_{size:03d}.pgm")
    selected = select_uniform_blocks(grid.score_list(), cfg.selection_rule)
    if not selected:
        return []
    regions = group_connected(selected, img, cfg, grid=grid)
    regions = merge_regions(regions, img, cfg)
    if debug_dir is not None:
        save_region_map(regions, (img.width, img.height), debug_dir / f"regions_{size:03d}.png")

    detections = []
    for region in sorted(regions, key=lambda r: r.id):
        mask = RegionMask.from_region(region)
        if shape_test(mask, cfg) is ShapeVerdict.ELIMINATE:
            continue
        hull = region_hull(region)
        candidate = analyze_candidate(region, hull, img, cfg)
        if debug_dir is not None:
            save_background_mask(
                candidate.background_mask,
                debug_dir / f"background_{size:03d}_{region.id:03d}.pbm",
            )
        if text_presence(candidate, cfg) is TextVerdict.TEXT:
            assert candidate.fg_color is not None
            detections.append(
                Detection(
                    scale=size,
                    hull=tuple((int(x), int(y)) for x, y in hull.vertices),
                    bg_color=candidate.bg_color,
                    fg_color=candidate.fg_color,
                    contrast=candidate.contrast,
                    text_fraction=candidate.text_fraction,
                )
            )
    return detections


def _dedupe_across_scales(detections: list[Detection]) -> list[Detection]:
    """Drop a detection when one from another scale overlaps it with
    IoU > 0.5 and has higher contrast (ties go to the earlier, coarser one)."""
    order = sorted(
        detections, key=lambda d: (-d.contrast, -d.scale, d.hull)
    )
    kept: list[Detection] = []
    for det in order:
        duplicate = any(
            other.scale != det.scale and polygon_iou(det.hull, other.hull) > 0.5
            for other in kept
        )
        if not duplicate:
            kept.append(det)
    return kept


def detect(img: Image, cfg: Config | None = None, debug_dir: str | Path | None = None) -> DetectionResult:
    """Run the full coarse-to-fine pipeline on one image.

    With cfg.stop_at_first_detection (the default) the scale descent stops
    at the first scale that yields any text area; otherwise all scales run
    and overlapping hulls from different scales are deduplicated, keeping
    the higher-contrast one.
    """
    if cfg is None:
        cfg = Config()
    dbg = None
    if debug_dir is not None:
        dbg = Path(debug_dir)
        dbg.mkdir(parents=True, exist_ok=True)

    size = initial_block_size(img, cfg)
    scales: list[int] = []
    collected: list[Detection] = []
    while True:
        scales.append(size)
        found = _detect_at_scale(img, size, cfg, dbg)
        log.info("scale %d: %d detections", size, len(found))
        collected.extend(found)
        if found and cfg.stop_at_first_detection:
            break
        if size // 2 < cfg.min_block_size:
            break
        size //= 2

    if not cfg.stop_at_first_detection:
        collected = _dedupe_across_scales(collected)
    return DetectionResult(
        width=img.width,
        height=img.height,
        config=cfg,
        scales_visited=tuple(scales),
        detections=tuple(collected),
    )
