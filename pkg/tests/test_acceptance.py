"""Acceptance gate: corpus-level detection quality, property suites and the
hand-computed regression values, each printed as its own PASS/FAIL line.

Corpus criteria use the synthetic benchmark exactly as the CLI would build
it (50 positives at contrast 200 on noise, 20 negatives, and the positive
corpus regenerated at contrast 50).
"""

import itertools
import statistics
import time

import numpy as np
import pytest

from textseg.core import BlockCoord, Config, Image, SelectionRule
from textseg.pipeline import detect
from textseg.regions import group_connected
from textseg.shape import RegionMask, convex_hull, polygon_iou, solidity
from textseg.synth import evaluate, generate, load_truths, random_spec, write_corpus
from textseg.uniformity import build_basis, score_array, selection_threshold

CFG = Config()


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _run_corpus(base_seed: int, count: int, *, contrast=200.0, negative=False):
    """Generate-and-detect without touching disk; returns results and truths."""
    results, truths = {}, {}
    times = []
    for i in range(count):
        spec = random_spec(base_seed, i, contrast=contrast, negative=negative)
        img, truth = generate(spec)
        name = f"synth_{spec.seed:08d}.png"
        t0 = time.perf_counter()
        results[name] = detect(img, CFG)
        times.append(time.perf_counter() - t0)
        truths[name] = truth
    return results, truths, times


@pytest.fixture(scope="module")
def positive_corpus():
    return _run_corpus(1, 50)


def test_synthetic_recall_and_runtime(positive_corpus):
    results, truths, times = positive_corpus
    report = evaluate(results, truths)
    median = statistics.median(times)
    _report(
        "synthetic-recall",
        report.recall >= 0.90,
        f"recall={report.recall:.3f} at IoU>=0.5 over {len(truths)} images",
    )
    _report(
        "runtime-per-image",
        median < 5.0 and max(times) < 5.0,
        f"median={median:.2f}s max={max(times):.2f}s per 1024x768 image",
    )


def test_negative_control():
    results, truths, _ = _run_corpus(2, 20, negative=True)
    report = evaluate(results, truths)
    _report(
        "negative-control",
        report.fp_image_rate <= 0.10,
        f"fp_image_rate={report.fp_image_rate:.3f} over 20 solid signs",
    )


def test_contrast_floor():
    results, truths, _ = _run_corpus(1, 50, contrast=50.0)
    report = evaluate(results, truths)
    _report(
        "contrast-floor",
        report.recall <= 0.10,
        f"recall={report.recall:.3f} with glyph contrast 50",
    )


def test_property_basis():
    ok = True
    for size in (2, 4, 8, 16):
        f = build_basis(size).filters.astype(np.int64)
        n = size * size
        ok &= f.shape == (n - 1, n)
        ok &= bool(np.isin(f, (-1, 1)).all())
        ok &= bool((f.sum(axis=1) == 0).all())
        ok &= bool(np.array_equal(f @ f.T, n * np.eye(n - 1, dtype=np.int64)))
        ok &= bool((f @ np.ones(n, dtype=np.int64) == 0).all())
    _report("property-basis", ok, "sizes 2,4,8,16: +/-1, zero-sum, orthogonal")


def test_property_score_zero_iff_constant_and_offset_invariant():
    rng = np.random.default_rng(101)
    bases = {s: build_basis(s) for s in (2, 4, 8)}
    ok = True
    worst = 0.0
    for i in range(1000):
        size = (2, 4, 8)[i % 3]
        if i % 5 == 0:
            block = np.full((size, size, 3), rng.integers(0, 256, size=3))
        else:
            block = rng.integers(0, 256, size=(size, size, 3))
        constant = (block.reshape(-1, 3) == block.reshape(-1, 3)[0]).all()
        score = score_array(block, bases[size])
        ok &= (score == 0.0) == bool(constant)
        for offset in (-50, 1, 100):
            shifted = score_array(block.astype(np.float64) + offset, bases[size])
            worst = max(worst, abs(shifted - score))
    ok &= worst <= 1e-9
    _report("property-score", ok, f"1000 blocks, worst offset drift {worst:.2e}")


def test_property_parseval():
    rng = np.random.default_rng(102)
    worst = 0.0
    for i in range(200):
        size = (2, 4, 8)[i % 3]
        basis = build_basis(size)
        block = rng.integers(0, 256, size=(size * size, 3)).astype(np.float64)
        coeffs = (basis.filters @ block) / basis.norm
        recon = block.mean(axis=0) + (basis.filters.T @ coeffs) / basis.norm
        worst = max(worst, float(np.abs(recon - block).max()))
    _report("property-parseval", worst <= 1e-6, f"worst reconstruction error {worst:.2e}")


def _oracle_hull(points: np.ndarray) -> set:
    """Keep points that are not strictly inside any triangle of the others."""
    n = len(points)
    idx = np.arange(n)
    tris = np.array(list(itertools.combinations(idx, 3)))
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    keep = set()
    for i in range(n):
        p = points[i]
        involved = (tris == i).any(axis=1)
        d1 = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
        d2 = (c[:, 0] - b[:, 0]) * (p[1] - b[:, 1]) - (c[:, 1] - b[:, 1]) * (p[0] - b[:, 0])
        d3 = (a[:, 0] - c[:, 0]) * (p[1] - c[:, 1]) - (a[:, 1] - c[:, 1]) * (p[0] - c[:, 0])
        strictly_inside = (((d1 > 0) & (d2 > 0) & (d3 > 0))
                           | ((d1 < 0) & (d2 < 0) & (d3 < 0))) & ~involved
        if not strictly_inside.any():
            keep.add((float(p[0]), float(p[1])))
    return keep


def test_property_convex_hull_oracle():
    rng = np.random.default_rng(103)
    ok = True
    for _ in range(200):
        n = int(rng.integers(3, 51))
        pts = rng.uniform(0.0, 100.0, size=(n, 2))
        hull = convex_hull(map(tuple, pts))
        ok &= set(hull.vertices) == _oracle_hull(pts)
    _report("property-convex-hull", ok, "200 random point sets vs triangle elimination")


def test_property_group_connected_oracle():
    rng = np.random.default_rng(104)
    palette = np.array([(25, 25, 25), (60, 60, 60), (100, 100, 100), (230, 30, 30)])
    ok = True
    for _ in range(100):
        rows, cols = rng.integers(2, 9, size=2)
        cells = (palette[rng.integers(0, 4, size=(rows, cols))]
                 + rng.integers(-6, 7, size=(rows, cols, 3))).clip(0, 255).astype(np.uint8)
        img = Image(np.repeat(np.repeat(cells, 2, axis=0), 2, axis=1))
        chosen = [(c, r) for r in range(rows) for c in range(cols) if rng.random() < 0.65]
        if not chosen:
            continue
        means = {
            (c, r): cells[r, c].astype(np.float64)  # blocks are constant
            for (c, r) in chosen
        }
        parent = {p: p for p in chosen}

        def find(p):
            while parent[p] != p:
                p = parent[p]
            return p

        for (c, r) in chosen:
            for nb in ((c + 1, r), (c, r + 1)):
                if nb in means and np.linalg.norm(means[(c, r)] - means[nb]) < CFG.color_merge_threshold:
                    parent[find((c, r))] = find(nb)
        expected = {}
        for p in chosen:
            expected.setdefault(find(p), set()).add(p)
        want = {frozenset(v) for v in expected.values()}
        got = {
            frozenset(region.coords())
            for region in group_connected({BlockCoord(c, r, 2) for c, r in chosen}, img, CFG)
        }
        ok &= got == want
    _report("property-group-connected", ok, "100 random grids vs quadratic union-find")


def test_property_pipeline_determinism(positive_corpus):
    results, truths, _ = positive_corpus
    ok = True
    for i, name in enumerate(sorted(truths)):
        if i >= 10:
            break
        spec = random_spec(1, int(name[-12:-4]) - 100000)
        img, _ = generate(spec)
        ok &= detect(img, CFG).to_json() == results[name].to_json()
    _report("property-determinism", ok, "10 corpus images, byte-identical JSON")


def test_worked_example_regressions():
    # block score 255*sqrt(3): top row black, bottom row white
    px = np.zeros((2, 2, 3), dtype=np.uint8)
    px[1, :, :] = 255
    score = score_array(px, build_basis(2))
    ok_score = abs(score - 441.67) <= 0.01

    # selection cutoff: mean 131 minus population std 93.012
    values = [10, 12, 11, 200, 210, 205, 198, 202]
    cutoff = selection_threshold(values, SelectionRule.mean_minus_std())
    oracle = statistics.fmean(values) - statistics.pstdev(values)
    ok_cutoff = abs(cutoff - oracle) <= 1e-9 and abs(cutoff - 37.9879) <= 0.01

    # L-shape solidity 3/4
    sol = solidity(RegionMask.from_coords([(0, 0), (1, 0), (0, 1)], 4))
    ok_sol = abs(sol - 0.75) <= 0.01

    _report(
        "worked-examples",
        ok_score and ok_cutoff and ok_sol,
        f"score={score:.2f} cutoff={cutoff:.4f} solidity={sol:.2f}",
    )
