"""Core types shared by every stage: images, configuration, colors and the
block tiling of an image into equal square tiles.

Everything here is immutable after construction and safe to share between
workers; all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image as PILImage

# Diagonal of the 8-bit RGB cube; no two colors can be farther apart.
MAX_RGB_DISTANCE = 255.0 * math.sqrt(3.0)


class InputError(ValueError):
    """Bad user-facing input: unreadable file, mismatched sizes, orphans."""


# ---------------------------------------------------------------------------
# Selection rule for uniform blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionRule:
    """How uniform blocks are picked from the score distribution.

    ``mean-std`` keeps blocks scoring strictly below mean minus one
    population standard deviation.  ``percentile`` keeps blocks at or below
    the q-th percentile score; useful when the score distribution is so
    heavy-tailed that mean minus std goes negative and selects nothing.
    """

    kind: str
    q: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("mean-std", "percentile"):
            raise ValueError(f"unknown selection rule kind: {self.kind!r}")
        if self.kind == "percentile" and not (0.0 <= self.q <= 100.0):
            raise ValueError(f"percentile must be in [0, 100], got {self.q}")

    @classmethod
    def mean_minus_std(cls) -> "SelectionRule":
        return cls("mean-std")

    @classmethod
    def percentile(cls, q: float) -> "SelectionRule":
        return cls("percentile", float(q))

    @classmethod
    def parse(cls, text: str) -> "SelectionRule":
        """Parse ``mean-std`` or ``pN`` (e.g. ``p20``)."""
        if text == "mean-std":
            return cls.mean_minus_std()
        if text.startswith("p"):
            try:
                return cls.percentile(float(text[1:]))
            except ValueError:
                pass
        raise ValueError(f"bad selection rule {text!r}; expected 'mean-std' or 'pN'")

    def __str__(self) -> str:
        if self.kind == "mean-std":
            return "mean-std"
        return f"p{self.q:g}"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Config:
    """Tunable thresholds of the detection pipeline.

    The distance thresholds are Euclidean distances in raw RGB (each channel
    0-255).  Values above the RGB cube diagonal (~441.7) are allowed and
    simply make the corresponding test impossible to pass.
    """

    min_block_size: int = 8
    color_merge_threshold: float = 45.0
    peak_separation_threshold: float = 100.0
    text_contrast_threshold: float = 100.0
    solidity_threshold: float = 0.95
    min_text_fraction: float = 0.01
    stop_at_first_detection: bool = True
    selection_rule: SelectionRule = field(default_factory=SelectionRule.mean_minus_std)

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.min_block_size) or self.min_block_size < 2:
            raise ValueError(
                f"min_block_size must be a power of two >= 2, got {self.min_block_size}"
            )
        for name in ("color_merge_threshold", "peak_separation_threshold",
                     "text_contrast_threshold"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not (0.0 < self.solidity_threshold <= 1.0):
            raise ValueError(
                f"solidity_threshold must be in (0, 1], got {self.solidity_threshold}"
            )
        if not (0.0 <= self.min_text_fraction <= 1.0):
            raise ValueError(
                f"min_text_fraction must be in [0, 1], got {self.min_text_fraction}"
            )

    def with_overrides(self, **kwargs) -> "Config":
        return replace(self, **kwargs)

    def to_json_dict(self) -> dict:
        """Config snapshot in fixed field order, for result serialization."""
        return {
            "min_block_size": self.min_block_size,
            "color_merge_threshold": round(float(self.color_merge_threshold), 4),
            "peak_separation_threshold": round(float(self.peak_separation_threshold), 4),
            "text_contrast_threshold": round(float(self.text_contrast_threshold), 4),
            "solidity_threshold": round(float(self.solidity_threshold), 4),
            "min_text_fraction": round(float(self.min_text_fraction), 4),
            "stop_at_first_detection": self.stop_at_first_detection,
            "selection_rule": str(self.selection_rule),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Config":
        return cls(
            min_block_size=int(d["min_block_size"]),
            color_merge_threshold=float(d["color_merge_threshold"]),
            peak_separation_threshold=float(d["peak_separation_threshold"]),
            text_contrast_threshold=float(d["text_contrast_threshold"]),
            solidity_threshold=float(d["solidity_threshold"]),
            min_text_fraction=float(d["min_text_fraction"]),
            stop_at_first_detection=bool(d["stop_at_first_detection"]),
            selection_rule=SelectionRule.parse(d["selection_rule"]),
        )


# ---------------------------------------------------------------------------
# Image raster
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Image:
    """8-bit RGB raster stored as a read-only (height, width, 3) array.

    Row-major pixel order; channel values are exact integers in [0, 255].
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValueError(f"pixel dtype must be integer, got {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must be in [0, 255]")
            px = px.astype(np.uint8)
        else:
            px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


def load_image(path: str | Path) -> Image:
    """Read a PNG or binary PPM (P6) raster.

    Rasters with an alpha channel are composited over white before use.
    Raises InputError when the file is missing or cannot be decoded.
    """
    try:
        with PILImage.open(path) as im:
            has_alpha = im.mode in ("RGBA", "LA") or (
                im.mode == "P" and "transparency" in im.info
            )
            if has_alpha:
                im = im.convert("RGBA")
                white = PILImage.new("RGBA", im.size, (255, 255, 255, 255))
                im = PILImage.alpha_composite(white, im).convert("RGB")
            else:
                im = im.convert("RGB")
            return Image(np.asarray(im, dtype=np.uint8))
    except (FileNotFoundError, IsADirectoryError) as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    except Exception as exc:  # Pillow raises various decode errors
        raise InputError(f"cannot decode image {path}: {exc}") from exc


def save_png(img: Image, path: str | Path) -> None:
    PILImage.fromarray(np.asarray(img.pixels), "RGB").save(path, format="PNG")


# ---------------------------------------------------------------------------
# Colors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColorVec:
    """Real-valued RGB mean color, each channel in [0, 255]."""

    r: float
    g: float
    b: float

    def __post_init__(self) -> None:
        for v in (self.r, self.g, self.b):
            if not (math.isfinite(v) and 0.0 <= v <= 255.0):
                raise ValueError(f"channel out of range: {(self.r, self.g, self.b)}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r, self.g, self.b)

    @classmethod
    def from_sequence(cls, rgb: Sequence[float]) -> "ColorVec":
        r, g, b = rgb
        return cls(float(r), float(g), float(b))


def color_distance(a: ColorVec | Sequence[float], b: ColorVec | Sequence[float]) -> float:
    """Euclidean distance between two RGB colors."""
    ar, ag, ab = a.as_tuple() if isinstance(a, ColorVec) else (a[0], a[1], a[2])
    br, bg, bb = b.as_tuple() if isinstance(b, ColorVec) else (b[0], b[1], b[2])
    return math.sqrt((ar - br) ** 2 + (ag - bg) ** 2 + (ab - bb) ** 2)


# ---------------------------------------------------------------------------
# Block tiling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class BlockCoord:
    """One square tile of the grid at a given scale.

    ``col``/``row`` are grid indices; ``size`` is the tile side in pixels.
    The tile covers pixels [col*size, (col+1)*size) x [row*size, (row+1)*size)
    and always lies fully inside the image: right/bottom remainder strips
    narrower than ``size`` are excluded from the grid.
    """

    col: int
    row: int
    size: int

    @property
    def origin(self) -> tuple[int, int]:
        return (self.col * self.size, self.row * self.size)

    @property
    def x0(self) -> int:
        return self.col * self.size

    @property
    def y0(self) -> int:
        return self.row * self.size

    @property
    def x1(self) -> int:
        return (self.col + 1) * self.size

    @property
    def y1(self) -> int:
        return (self.row + 1) * self.size


def grid_shape(width: int, height: int, size: int) -> tuple[int, int]:
    """(cols, rows) of the grid of full size x size tiles."""
    if size < 1:
        raise ValueError(f"block size must be >= 1, got {size}")
    return (width // size, height // size)


def grid_blocks(width: int, height: int, size: int) -> Iterator[BlockCoord]:
    """All full blocks of the tiling, in row-major order."""
    cols, rows = grid_shape(width, height, size)
    for row in range(rows):
        for col in range(cols):
            yield BlockCoord(col, row, size)


def block_pixels(img: Image, block: BlockCoord) -> np.ndarray:
    """The (size, size, 3) pixel view of a block; raises if out of bounds."""
    if block.col < 0 or block.row < 0 or block.x1 > img.width or block.y1 > img.height:
        raise ValueError(f"block {block} does not lie inside the {img.width}x{img.height} image")
    return img.pixels[block.y0:block.y1, block.x0:block.x1]


def block_mean_color(img: Image, block: BlockCoord) -> ColorVec:
    """Per-channel arithmetic mean over the block's pixels."""
    px = block_pixels(img, block)
    mean = px.reshape(-1, 3).astype(np.int64).sum(axis=0) / (block.size * block.size)
    return ColorVec(float(mean[0]), float(mean[1]), float(mean[2]))
