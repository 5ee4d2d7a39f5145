"""Acceptance criteria, one PASS/FAIL line each in the terminal summary."""
import itertools
import math
import time

import numpy as np

from meterread.cli import main
from meterread.core import BinaryMask, ImageBuffer
from meterread.ctc import brute_force_prob, ctc_loss, ProbMatrix
from meterread.geometry import (
    Correspondence,
    Homography,
    has_collinear_triple,
    offsets_to_homography,
    project,
    solve_dlt,
)
from meterread.metrics import EvalRecord, avg_reference_error, avg_relative_error
from meterread.pipeline import PipelineConfig, SceneInput, run_scene
from meterread.postproc import blobs, hough_line, thin
from meterread.reading import compute_reading
from meterread.synthmeter import SpecRanges, random_spec, render
from meterread.warp import warp_image

from conftest import ACCEPTANCE_LINES, central_diff, max_rel_err, random_ctc_instance
from gradcases import CASES


def report(name, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def rel_err(value, truth):
    return abs(value - truth) / abs(truth)


def read_scenes(specs, cfg):
    errs = []
    for spec in specs:
        sc = render(spec)
        r = run_scene(SceneInput(sc.pointer_map_gt, sc.key_scale_map_gt, sc.annotation), cfg)
        errs.append(rel_err(r.value, sc.annotation.true_reading))
    return np.array(errs)


def test_synthetic_end_to_end():
    specs = [random_spec([2024, i], SpecRanges(jitter=0.0)) for i in range(200)]
    t0 = time.perf_counter()
    errs = read_scenes(specs, PipelineConfig(aligned_size=256))
    dt = time.perf_counter() - t0
    ok = errs.mean() < 0.005 and errs.max() < 0.02 and dt < 30
    report(
        "synthetic end-to-end (200 undistorted scenes)",
        ok,
        f"mean {100 * errs.mean():.3f}% (<0.5), max {100 * errs.max():.3f}% (<2), {dt:.1f} s (<30)",
    )


def test_alignment_round_trip():
    specs = [random_spec([4048, i]) for i in range(100)]
    worst_h = 0.0
    for spec in specs:
        ann = render(spec).annotation
        n = spec.image_size
        worst_h = max(worst_h, offsets_to_homography(n, n, ann.offsets).max_abs_diff(ann.h_gt))
    errs = read_scenes(specs, PipelineConfig())
    ok = errs.mean() < 0.01 and worst_h < 1e-9
    report(
        "alignment round-trip (100 distorted scenes)",
        ok,
        f"mean {100 * errs.mean():.3f}% (<1.0), max {100 * errs.max():.3f}%, h from offsets off by {worst_h:.1e} (<1e-9)",
    )


def random_dlt_instance(rng):
    while True:
        src = rng.uniform(0, 100, size=(4, 2))
        if has_collinear_triple(src):
            continue
        m = np.eye(3) + rng.normal(scale=[[0.2, 0.2, 10], [0.2, 0.2, 10], [1e-3, 1e-3, 0]])
        try:
            h0 = Homography(m)
            dst = np.array([project(h0, p) for p in src])
        except ArithmeticError:
            continue
        if not has_collinear_triple(dst) and np.all(np.abs(dst) < 1e4):
            return [Correspondence(tuple(a), tuple(b)) for a, b in zip(src, dst)]


def test_dlt_exactness():
    rng = np.random.default_rng(7)
    instances = [random_dlt_instance(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    hs = [solve_dlt(c) for c in instances]
    dt = time.perf_counter() - t0
    worst = max(
        math.dist(project(h, c.src), c.dst) for h, corrs in zip(hs, instances) for c in corrs
    )
    report("DLT exactness (1000 instances)", worst < 1e-9 and dt < 1.0, f"max residual {worst:.1e} px (<1e-9), {dt:.2f} s (<1)")


def test_warp_identity():
    rng = np.random.default_rng(8)
    exact = 0
    for _ in range(50):
        h, w = rng.integers(1, 60, size=2)
        img = ImageBuffer(rng.random((h, w, int(rng.choice([1, 3])))))
        out = warp_image(img, Homography.identity(), int(w), int(h))
        exact += bool(np.array_equal(out.pixels, img.pixels))
    report("warp identity bit-exactness (50 images)", exact == 50, f"{exact}/50 bit-identical")


def test_ctc_oracle_equivalence():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(500):
        probs, label = random_ctc_instance(rng)
        worst = max(worst, abs(math.exp(-ctc_loss(probs, label).value) - brute_force_prob(probs, label)))
    worst_partition = 0.0
    for T, C in itertools.product(range(1, 5), range(2, 5)):
        probs = ProbMatrix(rng.dirichlet(np.ones(C), size=T))
        total = math.prod(probs.rows[:, C - 1])
        for n in range(1, T + 1):
            total += sum(brute_force_prob(probs, lab) for lab in itertools.product(range(C - 1), repeat=n))
        worst_partition = max(worst_partition, abs(total - 1.0))
    ok = worst < 1e-9 and worst_partition < 1e-9
    report("CTC oracle equivalence (500 instances)", ok, f"max |exp(-loss) - brute force| {worst:.1e}, partition off by {worst_partition:.1e}")


def test_gradient_verification():
    rng = np.random.default_rng(10)
    names = ["mse_offsets", "dice_loss", "component_loss", "ohem_bce", "ctc_loss"]
    worst = {}
    for name in names:
        errs = []
        for _ in range(20):
            f, x0, grad = CASES[name](rng)
            errs.append(max_rel_err(grad, central_diff(f, x0, step=1e-4)))
        worst[name] = max(errs)
    ok = max(worst.values()) < 1e-4
    report("gradient verification (5 losses x 20)", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def random_blob_mask(rng, size=40):
    ys, xs = np.mgrid[0:size, 0:size]
    bits = np.zeros((size, size), dtype=bool)
    for _ in range(int(rng.integers(1, 5))):
        cx, cy = rng.uniform(0, size, 2)
        if rng.random() < 0.5:
            bits |= np.hypot(xs - cx, ys - cy) <= rng.uniform(2, 9)
        else:
            a, b = rng.uniform(2, 10, 2)
            bits |= (np.abs(xs - cx) <= a) & (np.abs(ys - cy) <= b)
    return BinaryMask(bits)


def rasterized_line(rng, length):
    """One pixel per step along the major axis (an ideal digital segment)."""
    theta = rng.uniform(0, math.pi)
    d = np.array([-math.sin(theta), math.cos(theta)])
    size = int(math.ceil(length)) + 6
    mid = rng.uniform(size / 2 - 1, size / 2 + 1, 2)
    a, b = mid - d * length / 2, mid + d * length / 2
    steps = int(math.ceil(max(abs(b - a)))) + 1
    pts = np.rint(a + np.outer(np.linspace(0, 1, steps), b - a)).astype(int)
    bits = np.zeros((size, size), dtype=bool)
    bits[pts[:, 1], pts[:, 0]] = True
    rho = float(mid @ np.array([math.cos(theta), math.sin(theta)]))
    return BinaryMask(bits), theta, rho


def line_errors(line, theta, rho):
    dt, r = abs(line.theta - theta), line.rho
    if dt > math.pi / 2:  # (rho, theta) and (-rho, theta - pi) are the same line
        dt, r = math.pi - dt, -r
    return dt, abs(r - rho)


def test_thinning_idempotence():
    rng = np.random.default_rng(11)
    masks = [random_blob_mask(rng) for _ in range(100)]
    idem = sum(np.array_equal(thin(thin(m)).bits, thin(m).bits) for m in masks)
    report("thinning idempotence (100 blob masks)", idem == 100, f"{idem}/100 idempotent")


def test_hough_line_recovery():
    rng = np.random.default_rng(12)
    # lengths span the whole range the line-recovery property is stated for
    lines = [rasterized_line(rng, rng.uniform(20, 200)) for _ in range(100)]
    errs = [line_errors(hough_line(m), t, r) for m, t, r in lines]
    good = [dt <= math.pi / 180 + 1e-12 and dr <= 1.5 for dt, dr in errs]
    misses = [int(m.count()) for (m, _, _), g in zip(lines, good) if not g]
    report(
        "Hough line recovery (100 lines, 20-200 px)",
        all(good),
        f"{sum(good)}/100 within 1 deg and 1.5 px; worst {math.degrees(max(e[0] for e in errs)):.2f} deg, "
        f"worst rho {max(e[1] for e in errs):.2f} px; misses have {sorted(misses)} pixels",
    )


def test_symmetric_centroids():
    rng = np.random.default_rng(13)
    worst = 0.0
    ys, xs = np.mgrid[0:41, 0:41]
    for _ in range(50):
        cx, cy = rng.integers(8, 33, 2) + rng.choice([0.0, 0.5], 2)
        shape = rng.integers(3)
        if shape == 0:
            bits = np.hypot(xs - cx, ys - cy) <= rng.uniform(1, 7)
        elif shape == 1:
            bits = (np.abs(xs - cx) <= rng.integers(1, 7)) & (np.abs(ys - cy) <= rng.integers(1, 7))
        else:
            bits = ((np.abs(xs - cx) <= 0.5) & (np.abs(ys - cy) <= 6)) | ((np.abs(ys - cy) <= 0.5) & (np.abs(xs - cx) <= 6))
        (blob,) = blobs(BinaryMask(bits))
        worst = max(worst, abs(blob.centroid[0] - cx), abs(blob.centroid[1] - cy))
    report("symmetric blob centroids (50 shapes)", worst <= 1e-12, f"max error {worst:.1e} (<=1e-12)")


def test_reading_formula():
    exact = compute_reading(45, 90, 3.0) == 1.5
    rng = np.random.default_rng(14)
    good = 0
    for _ in range(1000):
        a2 = rng.uniform(0.5, 359.5)
        x, y = np.sort(rng.uniform(0, 359.5, 2))
        num = rng.uniform(0.01, 100)
        s = 2.0 ** int(rng.integers(-20, 21))
        homog = compute_reading(x, a2, num * s) == compute_reading(x, a2, num) * s
        mono = compute_reading(x, a2, num) <= compute_reading(y, a2, num)
        good += homog and mono
    report("reading formula", exact and good == 1000, f"(45, 90, 3.0) -> 1.5 bit-exact: {exact}; properties {good}/1000")


def test_error_indicators():
    recs = [EvalRecord(1.1, 1.0, 2.0)]
    rel, ref = avg_relative_error(recs), avg_reference_error(recs)
    report("error indicators", rel == 10.0 and ref == 5.0, f"relative {rel!r}%, reference {ref!r}%")


def test_cli_determinism(tmp_path):
    trees = []
    for name in ("a", "b"):
        root = tmp_path / name
        assert main(["synth", "--count", "3", "--seed", "7", "--out", str(root), "--jitter", "0.1"]) == 0
        trees.append({p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()})
    report("CLI determinism", trees[0] == trees[1] and len(trees[0]) == 15, f"{len(trees[0])} files, identical: {trees[0] == trees[1]}")
