import numpy as np

from textseg.core import Image


def solid_image(width: int, height: int, color) -> Image:
    return Image(np.full((height, width, 3), color, dtype=np.uint8))


def image_from_blocks(block_colors, size: int) -> Image:
    """Image where grid cell (col, row) is filled with block_colors[row, col]."""
    arr = np.asarray(block_colors, dtype=np.uint8)
    return Image(np.repeat(np.repeat(arr, size, axis=0), size, axis=1))
