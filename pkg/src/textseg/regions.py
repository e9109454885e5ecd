"""Grouping uniform blocks into candidate background regions.

Connected uniform blocks of similar color are grouped first; the resulting
regions are then merged pairwise when their mean colors are close and the
colors sampled in the gap between them are either unimodal (same surface)
or bimodal with well-separated peaks (same surface interrupted by
contrasting content such as text strokes).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .core import BlockCoord, ColorVec, Config, Image, color_distance
from .uniformity import compute_block_grid


class GapClass(enum.Enum):
    UNIMODAL = "unimodal"
    BIMODAL_MERGEABLE = "bimodal-mergeable"
    BIMODAL_SPLIT = "bimodal-split"


@dataclass(frozen=True)
class Region:
    """A set of same-scale blocks treated as one candidate background.

    ``color_sum`` and ``pixel_count`` are exact, so merged regions keep a
    mean color identical to recomputation from scratch.
    """

    id: int
    block_size: int
    blocks: frozenset[BlockCoord]
    color_sum: tuple[float, float, float]
    pixel_count: int

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("region must contain at least one block")

    @property
    def mean_color(self) -> ColorVec:
        n = self.pixel_count
        return ColorVec(self.color_sum[0] / n, self.color_sum[1] / n, self.color_sum[2] / n)

    def coords(self) -> set[tuple[int, int]]:
        return {(b.col, b.row) for b in self.blocks}


@dataclass
class GapSample:
    """Pixels read from the space between two regions."""

    pixels: np.ndarray  # (n, 3) uint8, possibly empty
    source: tuple[int, int]

    def __len__(self) -> int:
        return int(self.pixels.shape[0])


def _region_from_component(
    rid: int, coords: list[tuple[int, int]], size: int, mean_colors: np.ndarray
) -> Region:
    n = size * size
    total = np.zeros(3, dtype=np.float64)
    blocks = []
    for col, row in coords:
        total += mean_colors[row, col] * n  # exact: means are blocksum / 2^k
        blocks.append(BlockCoord(col, row, size))
    return Region(
        id=rid,
        block_size=size,
        blocks=frozenset(blocks),
        color_sum=(float(total[0]), float(total[1]), float(total[2])),
        pixel_count=n * len(blocks),
    )


def group_connected(
    uniform: set[BlockCoord], img: Image, cfg: Config, grid=None
) -> list[Region]:
    """Partition uniform blocks into connected similar-color regions.

    Two blocks join when they are 4-adjacent in the grid and their mean
    colors are strictly within the merge threshold; regions are the
    connected components of that relation, so a chain of pairwise-similar
    blocks forms one region even if its endpoints differ more.  ``grid``
    may pass a precomputed BlockGrid for the same image and scale.
    """
    if not uniform:
        return []
    sizes = {b.size for b in uniform}
    if len(sizes) != 1:
        raise ValueError(f"uniform blocks must share one size, got {sorted(sizes)}")
    size = sizes.pop()
    if grid is not None and grid.block_size != size:
        raise ValueError("grid block size does not match the uniform blocks")
    mean_colors = (grid or compute_block_grid(img, size)).mean_colors

    order = sorted(uniform, key=lambda b: (b.row, b.col))
    index = {(b.col, b.row): i for i, b in enumerate(order)}
    parent = list(range(len(order)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for i, b in enumerate(order):
        for dc, dr in ((1, 0), (0, 1)):
            j = index.get((b.col + dc, b.row + dr))
            if j is None:
                continue
            d = color_distance(mean_colors[b.row, b.col], mean_colors[b.row + dr, b.col + dc])
            if d < cfg.color_merge_threshold:
                union(i, j)

    components: dict[int, list[tuple[int, int]]] = {}
    for i, b in enumerate(order):
        components.setdefault(find(i), []).append((b.col, b.row))

    regions = []
    for rid, root in enumerate(sorted(components)):  # scan order of first member
        regions.append(_region_from_component(rid, components[root], size, mean_colors))
    return regions


def _block_centers(region: Region) -> np.ndarray:
    """(n, 2) integer pixel centers of the region's blocks, in sorted block order."""
    s = region.block_size
    coords = sorted(region.coords(), key=lambda cr: (cr[1], cr[0]))
    return np.array([(c * s + s // 2, r * s + s // 2) for c, r in coords], dtype=np.int64)


def _bresenham(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    """Integer line from p0 to p1 inclusive, one pixel per step."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    pts = []
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return pts


def sample_gap(a: Region, b: Region, img: Image) -> GapSample:
    """Colors along the segment joining the closest pair of blocks.

    The segment runs between the centers of the closest blocks (one from
    each region) and is walked in 1-pixel steps; pixels inside either
    region are excluded.  Adjacent regions yield an empty sample.
    """
    if a.id == b.id:
        raise ValueError("cannot sample the gap of a region against itself")
    if a.block_size != b.block_size:
        raise ValueError("regions must be at the same scale")
    ca, cb = _block_centers(a), _block_centers(b)
    diff = ca[:, None, :] - cb[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    i, j = np.unravel_index(int(d2.argmin()), d2.shape)  # first minimum: deterministic
    p0 = (int(ca[i, 0]), int(ca[i, 1]))
    p1 = (int(cb[j, 0]), int(cb[j, 1]))

    s = a.block_size
    members = a.coords() | b.coords()
    colors = []
    for x, y in _bresenham(p0, p1):
        if (x // s, y // s) in members:
            continue
        colors.append(img.pixels[y, x])
    pixels = np.array(colors, dtype=np.uint8) if colors else np.empty((0, 3), dtype=np.uint8)
    return GapSample(pixels, (a.id, b.id))


def _two_means(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 2-means in RGB: centers seeded at the most distant pair.

    Ties for the most distant pair are broken by the lexicographically
    smallest color pair, so the result does not depend on sample order.
    Returns (centers (2, 3), labels (n,)).
    """
    pts = pixels.astype(np.float64)
    # The most distant pair depends only on the set of distinct colors;
    # deduplicating keeps the tie-break cheap on two-color samples.
    uniq = np.unique(pts, axis=0)  # sorted lexicographically
    diff = uniq[:, None, :] - uniq[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    dmax = d2.max()
    if dmax == 0.0:
        centers = np.vstack([pts[0], pts[0]])
        return centers, np.zeros(len(pts), dtype=np.int64)
    ii, jj = np.nonzero(np.triu(d2 == dmax))
    best = min(
        (tuple(uniq[i]), tuple(uniq[j])) for i, j in zip(ii, jj)
    )
    centers = np.array(best, dtype=np.float64)
    labels = np.zeros(len(pts), dtype=np.int64)
    for _ in range(50):
        dist = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)  # ties go to cluster 0
        moved = 0.0
        for t in (0, 1):
            members = pts[labels == t]
            if len(members):
                new = members.mean(axis=0)
                moved = max(moved, float(np.abs(new - centers[t]).max()))
                centers[t] = new
        if moved < 1e-6:
            break
    return centers, labels


def classify_gap(sample: GapSample, cfg: Config) -> GapClass:
    """Decide whether the gap colors are one population or two.

    2-means gives the two candidate peaks; ``d`` is their distance and
    ``w`` the mean distance of samples to their own center.  A gap is
    unimodal when empty or when d < max(2w, 20): the factor 2 requires the
    peaks to stand clear of the within-cluster spread and the floor of 20
    absorbs sensor noise on visually flat gaps.
    """
    if len(sample) == 0:
        return GapClass.UNIMODAL
    centers, labels = _two_means(sample.pixels)
    d = float(np.sqrt(((centers[0] - centers[1]) ** 2).sum()))
    own = centers[labels]
    w = float(np.sqrt(((sample.pixels.astype(np.float64) - own) ** 2).sum(axis=1)).mean())
    if d < max(2.0 * w, 20.0):
        return GapClass.UNIMODAL
    if d >= cfg.peak_separation_threshold:
        return GapClass.BIMODAL_MERGEABLE
    return GapClass.BIMODAL_SPLIT


def _merge_two(a: Region, b: Region) -> Region:
    return Region(
        id=min(a.id, b.id),
        block_size=a.block_size,
        blocks=a.blocks | b.blocks,
        color_sum=(
            a.color_sum[0] + b.color_sum[0],
            a.color_sum[1] + b.color_sum[1],
            a.color_sum[2] + b.color_sum[2],
        ),
        pixel_count=a.pixel_count + b.pixel_count,
    )


def merge_regions(regions: list[Region], img: Image, cfg: Config) -> list[Region]:
    """Merge regions with similar means whose gap is unimodal or cleanly bimodal.

    Candidate pairs are tried in ascending (color distance, lower id) order
    and merging repeats until no pair qualifies, so the output partition is
    independent of the input list order.  The merged region keeps the lower
    id; its mean color is recomputed exactly from the member sums.
    """
    sizes = {r.block_size for r in regions}
    if len(sizes) > 1:
        raise ValueError("regions must share one scale")
    live = {r.id: r for r in regions}
    if len(live) != len(regions):
        raise ValueError("region ids must be unique")
    while True:
        pairs = []
        ids = sorted(live)
        for i_pos, i in enumerate(ids):
            for j in ids[i_pos + 1:]:
                d = color_distance(live[i].mean_color, live[j].mean_color)
                if d < cfg.color_merge_threshold:
                    pairs.append((d, i, j))
        pairs.sort()
        merged = False
        for _, i, j in pairs:
            verdict = classify_gap(sample_gap(live[i], live[j], img), cfg)
            if verdict is not GapClass.BIMODAL_SPLIT:
                region = _merge_two(live[i], live[j])
                del live[j]
                live[i] = region
                merged = True
                break
        if not merged:
            return [live[i] for i in sorted(live)]


def save_region_map(
    regions: list[Region], image_size: tuple[int, int], path: str | Path
) -> None:
    """Debug dump: region labels as an indexed PNG, one palette color per id."""
    width, height = image_size
    canvas = np.zeros((height, width), dtype=np.uint8)
    for region in regions:
        idx = region.id % 255 + 1
        s = region.block_size
        for col, row in region.coords():
            canvas[row * s:(row + 1) * s, col * s:(col + 1) * s] = idx
    img = PILImage.fromarray(canvas, "P")
    rng = np.random.default_rng(0)  # fixed palette, black background
    palette = rng.integers(32, 256, size=(256, 3), dtype=np.uint8)
    palette[0] = 0
    img.putpalette(palette.flatten().tolist())
    img.save(path)
