import numpy as np
import pytest

from conftest import solid_image
from textseg.core import BlockCoord, ColorVec, Config, Image, color_distance
from textseg.regions import Region
from textseg.shape import region_hull
from textseg.textcheck import (
    CandidateArea,
    TextVerdict,
    analyze_candidate,
    expand_background,
    hull_pixel_mask,
    save_background_mask,
    text_presence,
)


def region_of(coords, size, img):
    total = np.zeros(3)
    for c, r in coords:
        total += img.pixels[r * size:(r + 1) * size, c * size:(c + 1) * size] \
            .reshape(-1, 3).astype(np.float64).sum(axis=0)
    return Region(
        0, size, frozenset(BlockCoord(c, r, size) for c, r in coords),
        tuple(total), size * size * len(coords),
    )


def ring_coords(n):
    return [(c, r) for r in range(n) for c in range(n)
            if c in (0, n - 1) or r in (0, n - 1)]


def disc_image(side=128, radius=20, bg=(255, 255, 255), fg=(0, 0, 0)):
    px = np.full((side, side, 3), bg, dtype=np.uint8)
    yy, xx = np.mgrid[0:side, 0:side]
    inside = (xx - side / 2) ** 2 + (yy - side / 2) ** 2 <= radius ** 2
    px[inside] = fg
    return Image(px), inside


def test_expand_covers_own_blocks_without_growth():
    img = solid_image(64, 64, (200, 200, 200))
    region = region_of([(0, 0), (1, 0), (0, 1), (1, 1)], 16, img)
    hull = region_hull(region)
    mask = expand_background(region, hull, img, Config())
    expected = np.zeros((64, 64), dtype=bool)
    expected[:32, :32] = True
    assert (mask == expected).all()


def test_expand_claims_background_but_never_text():
    img, disc = disc_image()
    # white blocks at size 32 not touching the disc: the ring of 12
    coords = [
        (c, r) for r in range(4) for c in range(4) if (c, r) not in
        ((1, 1), (2, 1), (1, 2), (2, 2))
    ]
    region = region_of(coords, 32, img)
    hull = region_hull(region)
    mask = expand_background(region, hull, img, Config())
    seed = np.zeros((128, 128), dtype=bool)
    for c, r in coords:
        seed[r * 32:(r + 1) * 32, c * 32:(c + 1) * 32] = True
    assert (mask & ~seed).sum() > 0          # it actually grew
    assert (seed & ~mask).sum() == 0         # and never shrank
    # the corner areas between coarse blocks and the disc get claimed
    assert mask[34, 34]
    # color-threshold oracle: a sub-block only passes the mean test while its
    # disc coverage stays small, so the disc core is untouchable and any
    # claimed disc pixels sit in a thin sliver along the boundary
    claimed_black = mask & disc
    assert claimed_black.sum() < 0.1 * disc.sum()
    if claimed_black.any():
        yy, xx = np.mgrid[0:128, 0:128]
        radius = np.sqrt((xx - 64.0) ** 2 + (yy - 64.0) ** 2)
        assert radius[claimed_black].min() >= 20 - 8


def test_expand_never_claims_grid_aligned_glyph():
    # with the glyph edges on the refinement grid every sub-block is purely
    # one color, so not a single glyph pixel is claimed at any level
    px = np.full((128, 128, 3), 255, dtype=np.uint8)
    px[48:80, 32:96] = 0
    img = Image(px)
    glyph = np.zeros((128, 128), dtype=bool)
    glyph[48:80, 32:96] = True
    coords = [(c, r) for r in range(4) for c in range(4)
              if (c, r) not in ((1, 1), (2, 1), (1, 2), (2, 2))]
    region = region_of(coords, 32, img)
    mask = expand_background(region, region_hull(region), img, Config())
    assert (mask & glyph).sum() == 0
    assert (mask | glyph).all()  # everything else is claimed


def test_expand_monotone_in_refinement_depth():
    img, _ = disc_image()
    coords = [
        (c, r) for r in range(4) for c in range(4) if (c, r) not in
        ((1, 1), (2, 1), (1, 2), (2, 2))
    ]
    region = region_of(coords, 32, img)
    hull = region_hull(region)
    coarse = expand_background(region, hull, img, Config(min_block_size=16))
    fine = expand_background(region, hull, img, Config(min_block_size=8))
    finest = expand_background(region, hull, img, Config(min_block_size=2))
    assert (coarse & ~fine).sum() == 0
    assert (fine & ~finest).sum() == 0
    assert finest.sum() > fine.sum() > coarse.sum()


def test_expand_excludes_drifting_gradient():
    # hull includes a gradient patch drifting far from the region mean
    px = np.full((64, 64, 3), 100, dtype=np.uint8)
    ramp = np.linspace(100, 255, 32).astype(np.uint8)
    px[24:40, 16:48] = ramp[None, :, None]  # horizontal ramp strip
    img = Image(px)
    coords = [(c, r) for r in range(4) for c in range(4)
              if not (r in (1, 2) and c in (1, 2))]
    region = region_of(coords, 16, img)
    hull = region_hull(region)
    mask = expand_background(region, hull, img, Config(min_block_size=4))
    dist = np.sqrt(
        ((img.pixels.astype(np.float64)
          - np.array(region.mean_color.as_tuple())) ** 2).sum(axis=2)
    )
    # sub-blocks are 4x4; any claimed pixel sits in a sub-block whose mean is
    # within the merge threshold, so pixels drifted beyond threshold plus the
    # worst intra-block spread (16 gray levels on this ramp) stay out
    far = dist > Config().color_merge_threshold + 16.0 * np.sqrt(3.0)
    assert far.sum() > 0
    assert (mask & far).sum() == 0


def test_expand_pixel_growth_at_min_scale():
    img, disc = disc_image(side=32, radius=6)
    coords = [(c, r) for r in range(4) for c in range(4)
              if (c, r) not in ((1, 1), (2, 1), (1, 2), (2, 2))]
    region = region_of(coords, 8, img)  # region already at min block size
    hull = region_hull(region)
    mask = expand_background(region, hull, img, Config(min_block_size=8))
    assert (mask & disc).sum() == 0
    # pixel growth claims every white pixel inside the hull
    assert (mask | disc).all()


def test_fg_converges_to_glyph_color():
    # flat background with one grid-aligned dark bar: with min_block_size 2
    # the claimed background reaches the bar exactly, so the foreground mean
    # is the bar color and the contrast matches the color distance
    bg, fg = (240, 240, 240), (40, 40, 40)
    px = np.full((256, 256, 3), bg, dtype=np.uint8)
    px[120:136, 96:160] = fg
    img = Image(px)
    coords = [(c, r) for r in range(4) for c in range(4)
              if not (r in (1, 2) and c in (1, 2))]
    region = region_of(coords, 64, img)
    hull = region_hull(region)
    cand = analyze_candidate(region, hull, img, Config(min_block_size=2))
    assert cand.fg_color is not None
    for got, want in zip(cand.fg_color.as_tuple(), fg):
        assert abs(got - want) <= 5.0
    assert cand.contrast == pytest.approx(color_distance(bg, fg), abs=10.0)
    assert cand.text_fraction == pytest.approx((16 * 64) / (256 * 256), rel=0.05)


def test_background_mask_stays_inside_hull():
    img, _ = disc_image()
    coords = [(c, r) for r in range(4) for c in range(4)
              if (c, r) not in ((1, 1), (2, 1), (1, 2), (2, 2))]
    region = region_of(coords, 32, img)
    hull = region_hull(region)
    cand = analyze_candidate(region, hull, img, Config())
    hull_px = hull_pixel_mask(hull, (128, 128))
    assert (cand.background_mask & ~hull_px).sum() == 0


def _area(contrast, fraction):
    img = solid_image(4, 4, (0, 0, 0))
    region = region_of([(0, 0)], 4, img)
    return CandidateArea(
        region=region,
        hull=region_hull(region),
        background_mask=np.zeros((4, 4), dtype=bool),
        bg_color=ColorVec(255, 255, 255),
        fg_color=ColorVec(0, 0, 0),
        contrast=contrast,
        text_fraction=fraction,
    )


def test_text_presence_examples():
    cfg = Config()
    # bg white vs fg black at fraction 0.15
    assert text_presence(_area(441.67, 0.15), cfg) is TextVerdict.TEXT
    # sqrt(3 * 20^2) = 34.64 below the floor
    assert text_presence(_area(34.64, 0.15), cfg) is TextVerdict.NO_TEXT
    # tiny foreground loses regardless of contrast
    assert text_presence(_area(441.67, 0.001), cfg) is TextVerdict.NO_TEXT


def test_text_presence_monotone_in_contrast():
    cfg = Config()
    for fraction in (0.0, 0.005, 0.01, 0.3, 1.0):
        previous = False
        for contrast in np.linspace(0, 441.67, 24):
            verdict = text_presence(_area(float(contrast), fraction), cfg) is TextVerdict.TEXT
            assert not (previous and not verdict)  # never flips back off
            previous = verdict


def test_background_mask_dump(tmp_path):
    mask = np.zeros((8, 8), dtype=bool)
    mask[2:6, 1:7] = True
    path = tmp_path / "bg.pbm"
    save_background_mask(mask, path)
    assert path.read_bytes().startswith(b"P4")
    from PIL import Image as PILImage

    loaded = np.asarray(PILImage.open(path))
    assert (loaded == mask).all()
