"""Shape tests for candidate regions and the planar geometry behind them.

A text background must at least partially surround its text, so a region
that is connected, hole-free and essentially convex cannot contain text and
is eliminated.  The geometry helpers (convex hull, polygon rasterization,
IoU) are shared with the evaluation harness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .core import Config

# 4-connectivity structuring element
_CROSS = ndimage.generate_binary_structure(2, 1)

Point = tuple[float, float]


class ShapeVerdict(enum.Enum):
    KEEP = "keep"
    ELIMINATE = "eliminate"


@dataclass(frozen=True)
class RegionMask:
    """Binary grid of a region over its tight bounding box.

    ``cells[r, c]`` refers to grid block (col0 + c, row0 + r) at scale
    ``block_size``.
    """

    cells: np.ndarray
    col0: int
    row0: int
    block_size: int

    def __post_init__(self) -> None:
        if not self.cells.any():
            raise ValueError("mask must contain at least one cell")
        rows = np.flatnonzero(self.cells.any(axis=1))
        cols = np.flatnonzero(self.cells.any(axis=0))
        if rows[0] != 0 or cols[0] != 0 or rows[-1] != self.cells.shape[0] - 1 \
                or cols[-1] != self.cells.shape[1] - 1:
            raise ValueError("bounding box must be tight")

    @classmethod
    def from_coords(
        cls, coords: Iterable[tuple[int, int]], block_size: int
    ) -> "RegionMask":
        pts = list(coords)
        if not pts:
            raise ValueError("mask must contain at least one cell")
        cols = [c for c, _ in pts]
        rows = [r for _, r in pts]
        col0, row0 = min(cols), min(rows)
        cells = np.zeros((max(rows) - row0 + 1, max(cols) - col0 + 1), dtype=bool)
        for c, r in pts:
            cells[r - row0, c - col0] = True
        return cls(cells, col0, row0, block_size)

    @classmethod
    def from_region(cls, region) -> "RegionMask":
        return cls.from_coords(region.coords(), region.block_size)


def is_connected(mask: RegionMask) -> bool:
    """True iff the mask's cells form a single 4-connected component."""
    _, count = ndimage.label(mask.cells, structure=_CROSS)
    return count == 1


def count_holes(mask: RegionMask) -> int:
    """Enclosed empty components inside the bounding box.

    An empty 4-connected component counts as a hole only when it does not
    touch the bounding-box border.
    """
    labels, count = ndimage.label(~mask.cells, structure=_CROSS)
    if count == 0:
        return 0
    border = np.zeros(mask.cells.shape, dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    touching = set(np.unique(labels[border & (labels > 0)]))
    return count - len(touching)


# ---------------------------------------------------------------------------
# Convex hull
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hull:
    """Convex polygon, counter-clockwise, first vertex lexicographically
    smallest, no three vertices collinear.  Degenerate inputs give one or
    two vertices."""

    vertices: tuple[Point, ...]


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> Hull:
    """Monotone-chain convex hull of the input points."""
    pts = sorted({(p[0], p[1]) for p in points})
    if not pts:
        raise ValueError("at least one point is required")
    if len(pts) <= 2:
        return Hull(tuple(pts))
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    verts = lower[:-1] + upper[:-1]
    if len(verts) == 2 and verts[0] == verts[1]:
        verts = verts[:1]
    return Hull(tuple(verts))


def mask_corner_points(mask: RegionMask) -> list[tuple[int, int]]:
    """All four corners of every member cell, in block units."""
    corners = set()
    for r, c in zip(*np.nonzero(mask.cells)):
        col, row = mask.col0 + int(c), mask.row0 + int(r)
        corners.update(
            ((col, row), (col + 1, row), (col, row + 1), (col + 1, row + 1))
        )
    return sorted(corners)


def region_hull(region) -> Hull:
    """Convex hull of a region's block corner points, in pixel coordinates."""
    s = region.block_size
    corners = set()
    for col, row in region.coords():
        x0, y0 = col * s, row * s
        corners.update(((x0, y0), (x0 + s, y0), (x0, y0 + s), (x0 + s, y0 + s)))
    return convex_hull(corners)


def points_in_convex(vertices: Sequence[Point], pts: np.ndarray) -> np.ndarray:
    """Boundary-inclusive membership of (n, 2) points in a convex polygon."""
    pts = np.asarray(pts, dtype=np.float64)
    if len(vertices) == 1:
        v = np.asarray(vertices[0], dtype=np.float64)
        return np.all(pts == v, axis=1)
    inside = np.ones(len(pts), dtype=bool)
    n = len(vertices)
    if n == 2:
        a, b = (np.asarray(v, dtype=np.float64) for v in vertices)
        e = b - a
        cross = e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])
        t = ((pts - a) @ e) / (e @ e)
        return (np.abs(cross) < 1e-9) & (t >= 0.0) & (t <= 1.0)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cross = (bx - ax) * (pts[:, 1] - ay) - (by - ay) * (pts[:, 0] - ax)
        inside &= cross >= -1e-9
    return inside


def polygon_area(vertices: Sequence[Point]) -> float:
    """Absolute shoelace area."""
    n = len(vertices)
    if n < 3:
        return 0.0
    total = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - y1 * x2
    return abs(total) / 2.0


def _clip_halfplane(poly: list[Point], a: float, b: float, c: float) -> list[Point]:
    """Sutherland-Hodgman clip of poly to a*x + b*y <= c."""
    out: list[Point] = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0) != (fq < 0) and fp != fq:
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def clip_polygon_to_rect(
    poly: Sequence[Point], x0: float, y0: float, x1: float, y1: float
) -> list[Point]:
    out = list(poly)
    for a, b, c in ((-1, 0, -x0), (1, 0, x1), (0, -1, -y0), (0, 1, y1)):
        if not out:
            break
        out = _clip_halfplane(out, a, b, c)
    return out


def solidity(mask: RegionMask, hull: Hull | None = None) -> float:
    """Fraction of hull-covered grid cells that belong to the region.

    A cell counts as covered when the hull polygon overlaps it with
    positive area, so rectangular masks score exactly 1.  Areas are
    measured on the block grid, consistent with hole detection.
    """
    if hull is None:
        hull = convex_hull(mask_corner_points(mask))
    verts = [(float(x), float(y)) for x, y in hull.vertices]
    rows, cols = mask.cells.shape
    # Cells with all four corners inside the hull are covered outright;
    # only the hull's boundary band needs explicit clipping.
    gx, gy = np.meshgrid(
        mask.col0 + np.arange(cols + 1), mask.row0 + np.arange(rows + 1)
    )
    corner_in = points_in_convex(
        hull.vertices, np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    ).reshape(rows + 1, cols + 1)
    full = corner_in[:-1, :-1] & corner_in[1:, :-1] & corner_in[:-1, 1:] & corner_in[1:, 1:]
    covered = int(full.sum())
    inside = int((full & mask.cells).sum())
    for r, c in np.argwhere(~full):
        x0, y0 = mask.col0 + int(c), mask.row0 + int(r)
        clipped = clip_polygon_to_rect(verts, x0, y0, x0 + 1, y0 + 1)
        if polygon_area(clipped) > 1e-9:
            covered += 1
            if mask.cells[r, c]:
                inside += 1
    return inside / covered if covered else 0.0


def shape_test(mask: RegionMask, cfg: Config) -> ShapeVerdict:
    """Eliminate regions that are connected, hole-free and essentially convex.

    Convexity is operationalized as solidity >= cfg.solidity_threshold;
    disconnected regions and regions with holes are always kept.
    """
    if not is_connected(mask):
        return ShapeVerdict.KEEP
    if count_holes(mask) > 0:
        return ShapeVerdict.KEEP
    if solidity(mask) >= cfg.solidity_threshold:
        return ShapeVerdict.ELIMINATE
    return ShapeVerdict.KEEP


# ---------------------------------------------------------------------------
# Polygon rasterization, IoU, outlines
# ---------------------------------------------------------------------------

def rasterize_polygon(
    vertices: Sequence[Point],
    origin: tuple[float, float],
    shape: tuple[int, int],
    step: float = 1.0,
) -> np.ndarray:
    """Even-odd rasterization on a grid of sample points.

    Sample (r, c) sits at origin + ((c + 0.5) * step, (r + 0.5) * step).
    Works for any simple polygon.
    """
    rows, cols = shape
    out = np.zeros((rows, cols), dtype=bool)
    if len(vertices) < 3:
        return out
    ox, oy = origin
    xs = ox + (np.arange(cols) + 0.5) * step
    edges = [
        (vertices[i], vertices[(i + 1) % len(vertices)]) for i in range(len(vertices))
    ]
    for r in range(rows):
        y = oy + (r + 0.5) * step
        crossings = []
        for (x1, y1), (x2, y2) in edges:
            if (y1 > y) != (y2 > y):
                crossings.append(x1 + (y - y1) * (x2 - x1) / (y2 - y1))
        if not crossings:
            continue
        crossings.sort()
        out[r] = np.searchsorted(crossings, xs) % 2 == 1
    return out


def polygon_iou(a: Sequence[Point], b: Sequence[Point]) -> float:
    """Intersection-over-union of two simple polygons by rasterization.

    Rasterized at pixel resolution; small polygons are supersampled so the
    longer side of the joint bounding box spans at least ~512 samples.
    """
    pts = [(float(x), float(y)) for x, y in list(a) + list(b)]
    if not pts:
        return 0.0
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    extent = max(x1 - x0, y1 - y0)
    if extent <= 0:
        return 0.0
    step = extent / 512.0 if extent < 512.0 else 1.0
    cols = int(np.ceil((x1 - x0) / step)) + 1
    rows = int(np.ceil((y1 - y0) / step)) + 1
    ra = rasterize_polygon(a, (x0, y0), (rows, cols), step)
    rb = rasterize_polygon(b, (x0, y0), (rows, cols), step)
    union = np.logical_or(ra, rb).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(ra, rb).sum() / union)


def outline_mask(
    vertices: Sequence[Point], shape: tuple[int, int], thickness: int = 3
) -> np.ndarray:
    """Pixels whose centers lie within thickness/2 of the polygon boundary."""
    rows, cols = shape
    out = np.zeros((rows, cols), dtype=bool)
    verts = [(float(x), float(y)) for x, y in vertices]
    if not verts:
        return out
    radius = thickness / 2.0
    if len(verts) == 1:
        segments = [(verts[0], verts[0])]
    else:
        segments = [(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))]
    for (x1, y1), (x2, y2) in segments:
        c0 = max(0, int(np.floor(min(x1, x2) - radius - 1)))
        c1 = min(cols, int(np.ceil(max(x1, x2) + radius + 1)))
        r0 = max(0, int(np.floor(min(y1, y2) - radius - 1)))
        r1 = min(rows, int(np.ceil(max(y1, y2) + radius + 1)))
        if c0 >= c1 or r0 >= r1:
            continue
        px = np.arange(c0, c1) + 0.5
        py = np.arange(r0, r1) + 0.5
        gx, gy = np.meshgrid(px, py)
        ex, ey = x2 - x1, y2 - y1
        ee = ex * ex + ey * ey
        if ee == 0:
            d2 = (gx - x1) ** 2 + (gy - y1) ** 2
        else:
            t = np.clip(((gx - x1) * ex + (gy - y1) * ey) / ee, 0.0, 1.0)
            d2 = (gx - (x1 + t * ex)) ** 2 + (gy - (y1 + t * ey)) ** 2
        out[r0:r1, c0:c1] |= d2 <= radius * radius
    return out
