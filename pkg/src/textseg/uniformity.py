"""Block texture uniformity: the +/-1 zero-sum filter bank, per-block scores
and the rule that picks the uniform blocks of an image.

Each square block, flattened row-major, is projected onto the rows of a
Sylvester-ordered Hadamard matrix.  Every row except the first consists of
+1/-1 entries summing to zero, so each coefficient measures the color
difference between two equal-size areas of the block; a block is perfectly
flat exactly when all of them vanish.  The first (all ones) row carries the
block's mean color and is excluded from the score.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image as PILImage
from scipy.linalg import hadamard

from .core import BlockCoord, Image, SelectionRule, block_pixels, grid_shape


@dataclass(frozen=True)
class FilterBasis:
    """Zero-sum +/-1 filters for one block size.

    ``filters`` has shape (size^2 - 1, size^2): all rows of the Hadamard
    matrix of order size^2 except the all-ones one, in row-major block
    order.  Rows are pairwise orthogonal and orthogonal to all-ones, each
    with squared norm size^2.
    """

    block_size: int
    filters: np.ndarray

    @property
    def norm(self) -> float:
        """Euclidean norm shared by all filters: sqrt(size^2) = size."""
        return float(self.block_size)


def build_basis(block_size: int) -> FilterBasis:
    """Filter bank for size x size blocks.

    The 2-D tensor product of two 1-D Hadamard bases equals the Sylvester
    Hadamard matrix of order size^2 on the row-major flattened block, so the
    construction needs ``block_size`` to be a power of two.
    """
    if block_size < 2 or block_size & (block_size - 1):
        raise ValueError(f"block size must be a power of two >= 2, got {block_size}")
    n = block_size * block_size
    mat = hadamard(n, dtype=np.int8)
    filters = mat[1:].copy()
    filters.setflags(write=False)
    return FilterBasis(block_size, filters)


@dataclass(frozen=True)
class UniformityScore:
    """L2 norm of a block's non-mean filter coefficients over all channels."""

    block: BlockCoord
    score: float


def score_array(block: np.ndarray, basis: FilterBasis) -> float:
    """Score a raw (size, size, 3) or (size^2, 3) channel array.

    Coefficients are (filter . channel) / norm; the score is the L2 norm of
    all 3*(size^2 - 1) coefficients.  Accepts values outside [0, 255] so
    that invariance properties can be checked without clamping.
    """
    arr = np.asarray(block, dtype=np.float64).reshape(-1, 3)
    n = basis.block_size * basis.block_size
    if arr.shape[0] != n:
        raise ValueError(f"expected {n} pixels for block size {basis.block_size}, got {arr.shape[0]}")
    coeffs = (basis.filters @ arr) / basis.norm
    return float(np.sqrt((coeffs * coeffs).sum()))


def score_block(img: Image, block: BlockCoord, basis: FilterBasis) -> UniformityScore:
    """Texture uniformity score of one image block; zero iff the block is flat."""
    if block.size != basis.block_size:
        raise ValueError(f"block size {block.size} does not match basis size {basis.block_size}")
    return UniformityScore(block, score_array(block_pixels(img, block), basis))


@dataclass(frozen=True)
class BlockGrid:
    """Per-block uniformity scores and mean colors for one scale.

    ``scores`` is (rows, cols) float; ``mean_colors`` is (rows, cols, 3).
    """

    block_size: int
    scores: np.ndarray
    mean_colors: np.ndarray

    @property
    def cols(self) -> int:
        return self.scores.shape[1]

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    def blocks(self):
        for row in range(self.rows):
            for col in range(self.cols):
                yield BlockCoord(col, row, self.block_size)

    def score_list(self) -> list[UniformityScore]:
        return [UniformityScore(b, float(self.scores[b.row, b.col])) for b in self.blocks()]


def compute_block_grid(img: Image, block_size: int) -> BlockGrid:
    """Scores and mean colors for every full block of the tiling.

    The score is computed from exact per-block sums of values and squares:
    because the filter rows together with the all-ones row form an
    orthogonal basis, the energy of the non-mean coefficients equals the
    total squared deviation from the block mean (Parseval).  This matches
    score_block without materializing the filter matrix, which matters for
    large blocks; the equivalence is pinned by tests.
    """
    cols, rows = grid_shape(img.width, img.height, block_size)
    if cols < 1 or rows < 1:
        raise ValueError(
            f"block size {block_size} exceeds the {img.width}x{img.height} image"
        )
    n = block_size * block_size
    crop = img.pixels[: rows * block_size, : cols * block_size].astype(np.int64)
    tiles = crop.reshape(rows, block_size, cols, block_size, 3)
    sums = tiles.sum(axis=(1, 3))
    sqsums = (tiles * tiles).sum(axis=(1, 3))
    means = sums / n
    energy = sqsums - sums.astype(np.float64) ** 2 / n
    scores = np.sqrt(np.maximum(energy.sum(axis=2), 0.0))
    scores.setflags(write=False)
    means.setflags(write=False)
    return BlockGrid(block_size, scores, means)


def selection_threshold(scores: Sequence[float] | np.ndarray, rule: SelectionRule) -> float:
    """Score cutoff for the given rule.

    mean-std uses the population standard deviation over all blocks of the
    image; percentile uses linear interpolation.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("at least one score is required")
    if rule.kind == "mean-std":
        return float(arr.mean() - arr.std())
    return float(np.percentile(arr, rule.q))


def select_uniform_blocks(
    scores: Iterable[UniformityScore], rule: SelectionRule
) -> set[BlockCoord]:
    """Blocks whose score passes the selection rule; may be empty.

    Under mean-std the comparison is strict (score < mean - std), so a flat
    score distribution selects nothing; under percentile it is inclusive.
    """
    items = list(scores)
    values = np.array([s.score for s in items], dtype=np.float64)
    cutoff = selection_threshold(values, rule)
    if rule.kind == "mean-std":
        keep = values < cutoff
    else:
        keep = values <= cutoff
    return {items[i].block for i in np.flatnonzero(keep)}


def save_score_heatmap(grid: BlockGrid, path: str | Path) -> None:
    """Debug dump: the score grid as a PGM (P5), linearly mapped to [0, 255]."""
    s = grid.scores
    lo, hi = float(s.min()), float(s.max())
    if hi > lo:
        img = np.round((s - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        img = np.zeros(s.shape, dtype=np.uint8)
    PILImage.fromarray(img, "L").save(path)
