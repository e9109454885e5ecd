"""Hierarchical text-area segmentation for natural images.

Text in natural images sits on a more or less uniform background, so the
library searches for uniform regions whose shape shows holes, then confirms
text inside each region's convex hull by color contrast between claimed
background and the remaining pixels.  The search runs coarse-to-fine over
halving block sizes.
"""

from .core import (
    BlockCoord,
    ColorVec,
    Config,
    Image,
    InputError,
    SelectionRule,
    block_mean_color,
    color_distance,
    load_image,
    save_png,
)
from .pipeline import Detection, DetectionResult, detect, initial_block_size
from .shape import convex_hull, polygon_iou
from .synth import EvalReport, GroundTruth, SynthSpec, evaluate, generate, write_corpus
from .uniformity import FilterBasis, build_basis, score_block

__version__ = "0.1.0"

__all__ = [
    "BlockCoord",
    "ColorVec",
    "Config",
    "Detection",
    "DetectionResult",
    "EvalReport",
    "FilterBasis",
    "GroundTruth",
    "Image",
    "InputError",
    "SelectionRule",
    "SynthSpec",
    "block_mean_color",
    "build_basis",
    "color_distance",
    "convex_hull",
    "detect",
    "evaluate",
    "generate",
    "initial_block_size",
    "load_image",
    "polygon_iou",
    "save_png",
    "score_block",
    "write_corpus",
    "__version__",
]
