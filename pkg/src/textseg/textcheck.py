"""Text presence test inside a kept region's convex hull.

The region is first grown with progressively smaller blocks so that the
background claims every background-colored pixel inside the hull; whatever
remains unclaimed is treated as foreground.  Text is declared when the
foreground is not negligible and its mean color contrasts strongly enough
with the background.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

from .core import ColorVec, Config, Image, color_distance
from .regions import Region
from .shape import Hull, points_in_convex

_CROSS = ndimage.generate_binary_structure(2, 1)


class TextVerdict(enum.Enum):
    TEXT = "text"
    NO_TEXT = "no-text"


@dataclass
class CandidateArea:
    """A shape-tested region with its hull and color statistics.

    ``background_mask`` is a full-image boolean raster restricted to the
    hull interior; ``fg_color`` is None when every hull pixel was claimed
    as background.
    """

    region: Region
    hull: Hull
    background_mask: np.ndarray
    bg_color: ColorVec
    fg_color: ColorVec | None
    contrast: float
    text_fraction: float


def hull_pixel_mask(hull: Hull, shape: tuple[int, int]) -> np.ndarray:
    """Pixels whose centers lie inside the hull polygon (boundary inclusive)."""
    rows, cols = shape
    xs = [v[0] for v in hull.vertices]
    ys = [v[1] for v in hull.vertices]
    c0 = max(0, int(np.floor(min(xs))))
    c1 = min(cols, int(np.ceil(max(xs))))
    r0 = max(0, int(np.floor(min(ys))))
    r1 = min(rows, int(np.ceil(max(ys))))
    out = np.zeros((rows, cols), dtype=bool)
    if c0 >= c1 or r0 >= r1:
        return out
    gx, gy = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    out[r0:r1, c0:c1] = points_in_convex(hull.vertices, pts).reshape(r1 - r0, c1 - c0)
    return out


def _paint_region(region: Region, shape: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    s = region.block_size
    for col, row in region.coords():
        mask[row * s:(row + 1) * s, col * s:(col + 1) * s] = True
    return mask


def _subblocks_inside_hull(
    hull: Hull, size: int, c0: int, c1: int, r0: int, r1: int
) -> np.ndarray:
    """Which size-aligned cells in [c0,c1) x [r0,r1) lie fully inside the hull.

    The hull is convex, so a cell is inside iff all four of its corners are.
    """
    gx, gy = np.meshgrid(
        np.arange(c0, c1 + 1) * size, np.arange(r0, r1 + 1) * size
    )
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    corner_ok = points_in_convex(hull.vertices, pts).reshape(r1 - r0 + 1, c1 - c0 + 1)
    return corner_ok[:-1, :-1] & corner_ok[1:, :-1] & corner_ok[:-1, 1:] & corner_ok[1:, 1:]


def expand_background(region: Region, hull: Hull, img: Image, cfg: Config) -> np.ndarray:
    """Grow the region's pixel coverage inside its hull with smaller blocks.

    Starting from the region's own blocks, the block size is halved down to
    cfg.min_block_size; at each level any sub-block fully inside the hull,
    4-adjacent to the already claimed background and with mean color
    strictly within cfg.color_merge_threshold of the region's mean is
    claimed.  When the region is already at the minimum block size the same
    growth runs pixel by pixel.  The result only ever grows, level to level.
    """
    shape = (img.height, img.width)
    mask = _paint_region(region, shape)
    ref = np.array(region.mean_color.as_tuple(), dtype=np.float64)

    xs = [v[0] for v in hull.vertices]
    ys = [v[1] for v in hull.vertices]

    sizes = []
    s = region.block_size // 2
    while s >= cfg.min_block_size:
        sizes.append(s)
        s //= 2

    if not sizes:
        # Single-pixel growth: each pixel is its own "block".
        c0 = max(0, int(np.floor(min(xs))))
        c1 = min(img.width, int(np.ceil(max(xs))))
        r0 = max(0, int(np.floor(min(ys))))
        r1 = min(img.height, int(np.ceil(max(ys))))
        if c0 >= c1 or r0 >= r1:
            return mask
        win = img.pixels[r0:r1, c0:c1].astype(np.float64)
        dist = np.sqrt(((win - ref) ** 2).sum(axis=2))
        gx, gy = np.meshgrid(np.arange(c0, c1) + 0.5, np.arange(r0, r1) + 0.5)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        inside = points_in_convex(hull.vertices, pts).reshape(r1 - r0, c1 - c0)
        allowed = inside & (dist < cfg.color_merge_threshold)
        seed = mask[r0:r1, c0:c1]
        grown = ndimage.binary_dilation(
            seed, structure=_CROSS, iterations=0, mask=allowed | seed
        )
        mask[r0:r1, c0:c1] = grown
        return mask

    for s in sizes:
        c0 = max(0, int(np.floor(min(xs))) // s)
        c1 = min(img.width // s, -(-int(np.ceil(max(xs))) // s))
        r0 = max(0, int(np.floor(min(ys))) // s)
        r1 = min(img.height // s, -(-int(np.ceil(max(ys))) // s))
        if c0 >= c1 or r0 >= r1:
            continue
        win = img.pixels[r0 * s:r1 * s, c0 * s:c1 * s].astype(np.int64)
        tiles = win.reshape(r1 - r0, s, c1 - c0, s, 3)
        means = tiles.sum(axis=(1, 3)) / (s * s)
        dist = np.sqrt(((means - ref) ** 2).sum(axis=2))
        inside = _subblocks_inside_hull(hull, s, c0, c1, r0, r1)
        allowed = inside & (dist < cfg.color_merge_threshold)
        claimed = (
            mask[r0 * s:r1 * s, c0 * s:c1 * s]
            .reshape(r1 - r0, s, c1 - c0, s)
            .all(axis=(1, 3))
        )
        grown = ndimage.binary_dilation(
            claimed, structure=_CROSS, iterations=0, mask=allowed | claimed
        )
        new_cells = grown & ~claimed
        if new_cells.any():
            pixels = np.repeat(np.repeat(new_cells, s, axis=0), s, axis=1)
            view = mask[r0 * s:r1 * s, c0 * s:c1 * s]
            view |= pixels
    return mask


def analyze_candidate(region: Region, hull: Hull, img: Image, cfg: Config) -> CandidateArea:
    """Compute the full background/foreground statistics for a candidate."""
    background = expand_background(region, hull, img, cfg)
    hull_px = hull_pixel_mask(hull, (img.height, img.width))
    fg = hull_px & ~background
    n_hull = int(hull_px.sum())
    n_fg = int(fg.sum())
    bg_mean = img.pixels[background].reshape(-1, 3).astype(np.float64).mean(axis=0)
    bg_color = ColorVec.from_sequence(bg_mean)
    if n_fg == 0:
        return CandidateArea(region, hull, background, bg_color, None, 0.0, 0.0)
    fg_mean = img.pixels[fg].reshape(-1, 3).astype(np.float64).mean(axis=0)
    fg_color = ColorVec.from_sequence(fg_mean)
    return CandidateArea(
        region=region,
        hull=hull,
        background_mask=background,
        bg_color=bg_color,
        fg_color=fg_color,
        contrast=color_distance(bg_color, fg_color),
        text_fraction=n_fg / n_hull,
    )


def text_presence(area: CandidateArea, cfg: Config) -> TextVerdict:
    """Text iff the foreground is non-negligible and contrasts enough."""
    if area.text_fraction >= cfg.min_text_fraction and \
            area.contrast >= cfg.text_contrast_threshold:
        return TextVerdict.TEXT
    return TextVerdict.NO_TEXT


def save_background_mask(mask: np.ndarray, path: str | Path) -> None:
    """Debug dump: background mask as PBM (P4), background pixels white."""
    PILImage.fromarray((mask * np.uint8(255)), "L").convert("1").save(path)
