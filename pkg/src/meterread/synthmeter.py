"""Synthetic dial renderer with exact ground truth.

Every shape is defined in the undistorted dial frame.  For a distorted
scene each output pixel is pulled back through the distortion and the
shape predicates are evaluated there, so the ground-truth maps stay binary
and the annotation is exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage

from .core import ImageBuffer, Point2, ScoreMap, load_image, save_image
from .ctc import DEFAULT_ALPHABET, ProbMatrix, parse_numeric
from .errors import EmptyRangeError, InvalidSpecError, UnparseableNumberError
from .geometry import (
    HORIZON_EPS,
    Correspondence,
    Homography,
    QuadOffsets,
    frame_corners,
    offsets_to_homography,
    project,
)

POINTER_LENGTH = 0.8  # of the dial radius
POINTER_HALF_WIDTH = 1.5
SCALE_RADIUS = 0.9
SCALE_BLOB_RADIUS = 2.5
GLYPH_SCALE = 2
AA_WIDTH = 2.0  # pixels of edge ramp in the display image

# 5x7 bitmaps, one string per row, '#' = ink
FONT = {
    "0": [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."],
    "1": ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."],
    "2": [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"],
    "3": ["#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."],
    "4": ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."],
    "5": ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."],
    "6": ["..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."],
    "7": ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."],
    "8": [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."],
    "9": [".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."],
    ".": [".....", ".....", ".....", ".....", ".....", ".##..", ".##.."],
}
_FONT_BITS = {k: np.array([[c == "#" for c in row] for row in v]) for k, v in FONT.items()}

KEY_NUMBERS = ("0.5", "1", "1.0", "1.6", "2.5", "3.0", "4", "6", "10", "16", "25", "0.25")


@dataclass(frozen=True)
class MeterSpec:
    image_size: int = 256
    dial_radius: float = 90.0
    zero_angle: float = 135.0
    span_angle: float = 180.0
    pointer_fraction: float = 0.5
    key_number: str = "1.0"
    distortion: Optional[Homography] = None
    seed: int = 0

    def __post_init__(self):
        if self.image_size < 16:
            raise InvalidSpecError("image_size must be at least 16")
        if not 0 < self.dial_radius < self.image_size / 2:
            raise InvalidSpecError("dial_radius must lie in (0, image_size/2)")
        if not 0 < self.span_angle < 360:
            raise InvalidSpecError("span_angle must lie in (0, 360)")
        if not 0 <= self.pointer_fraction <= 1:
            raise InvalidSpecError("pointer_fraction must lie in [0, 1]")
        try:
            if parse_numeric(self.key_number) <= 0:
                raise InvalidSpecError("key_number must be positive")
        except UnparseableNumberError as exc:
            raise InvalidSpecError(str(exc)) from None

    @property
    def center(self):
        c = (self.image_size - 1) / 2.0
        return Point2(c, c)

    @property
    def pointer_angle(self):
        return self.zero_angle + self.pointer_fraction * self.span_angle

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["distortion"] = None if self.distortion is None else self.distortion.m.reshape(-1).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("distortion") is not None:
            d["distortion"] = Homography(np.reshape(d["distortion"], (3, 3)))
        return cls(**d)


@dataclass(frozen=True)
class MeterAnnotation:
    """Ground truth.  Point fields are in the (possibly distorted) image frame."""

    dial_center: Point2
    zero_scale: Point2
    key_scale: Point2
    pointer_angle: float
    key_number: str
    true_reading: float
    correspondences: tuple
    offsets: QuadOffsets
    h_gt: Homography
    image_size: int = 0

    def to_dict(self):
        return {
            "dial_center": list(self.dial_center),
            "zero_scale": list(self.zero_scale),
            "key_scale": list(self.key_scale),
            "pointer_angle": self.pointer_angle,
            "key_number": self.key_number,
            "true_reading": self.true_reading,
            "correspondences": [[list(c.src), list(c.dst)] for c in self.correspondences],
            "offsets": [list(p) for p in self.offsets.d],
            "h": self.h_gt.m.reshape(-1).tolist(),
            "image_size": self.image_size,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(
            dial_center=Point2(*d["dial_center"]),
            zero_scale=Point2(*d["zero_scale"]),
            key_scale=Point2(*d["key_scale"]),
            pointer_angle=float(d["pointer_angle"]),
            key_number=str(d["key_number"]),
            true_reading=float(d["true_reading"]),
            correspondences=tuple(
                Correspondence(Point2(*s), Point2(*t)) for s, t in d["correspondences"]
            ),
            offsets=QuadOffsets(d["offsets"]),
            h_gt=Homography(np.reshape(d["h"], (3, 3))),
            image_size=int(d.get("image_size", 0)),
        )


@dataclass(frozen=True)
class SynthScene:
    image: ImageBuffer
    pointer_map_gt: ScoreMap
    key_scale_map_gt: ScoreMap
    annotation: MeterAnnotation
    spec: MeterSpec


# ---------------------------------------------------------------------------
# shape primitives on coordinate arrays (undistorted frame)

def _unit(deg):
    r = math.radians(deg)
    return np.array([math.cos(r), math.sin(r)])


def _seg_distance(X, Y, a, b):
    ab = b - a
    t = ((X - a[0]) * ab[0] + (Y - a[1]) * ab[1]) / float(ab @ ab)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(X - (a[0] + t * ab[0]), Y - (a[1] + t * ab[1]))


def _coverage(signed_dist):
    """Approximate pixel coverage from a signed distance (negative inside).

    The ramp is AA_WIDTH pixels wide; a soft edge keeps the display image
    close to band-limited, so it survives a warp and its inverse.
    """
    return np.clip(0.5 - signed_dist / AA_WIDTH, 0.0, 1.0)


def _glyph_coverage(X, Y, text, center):
    """Ink coverage in [0, 1] for ``text`` in the 5x7 font, centred.

    The font bitmap is sampled bilinearly, which softens glyph edges the
    same way the coverage ramp softens strokes.
    """
    w = (6 * len(text) - 1) * GLYPH_SCALE
    h = 7 * GLYPH_SCALE
    x0, y0 = center[0] - w / 2.0, center[1] - h / 2.0
    bitmap = np.zeros((7, 6 * len(text)))
    for i, ch in enumerate(text):
        bitmap[:, 6 * i : 6 * i + 5] = _FONT_BITS[ch]
    bitmap = np.pad(bitmap, 1)
    # cell centres sit at half-integers; +1 for the padding
    u = (X - x0) / GLYPH_SCALE + 0.5
    v = (Y - y0) / GLYPH_SCALE + 0.5
    return ndimage.map_coordinates(bitmap, [v, u], order=1, cval=0.0)


def _preimage_grid(size, h):
    ys, xs = np.mgrid[0:size, 0:size].astype(float)
    if h is None:
        return xs, ys
    hinv = np.linalg.inv(h.m)
    if abs(hinv[2, 2]) > HORIZON_EPS:
        hinv = hinv / hinv[2, 2]
    den = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    bad = np.abs(den) <= HORIZON_EPS
    den = np.where(bad, 1.0, den)
    X = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / den
    Y = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / den
    far = -10.0 * size  # horizon pixels land far outside the dial
    return np.where(bad, far, X), np.where(bad, far, Y)


def _texture(X, Y, size, rng, amplitude):
    grid = rng.random((9, 9))
    gx = np.clip(X / (size - 1) * 8, 0, 8)
    gy = np.clip(Y / (size - 1) * 8, 0, 8)
    smooth = ndimage.map_coordinates(grid, [gy, gx], order=1)
    return amplitude * (smooth - 0.5)


def _paint(img, cov, color):
    """Blend ``color`` over ``img`` in place with per-pixel coverage."""
    sel = cov > 0
    c = cov[sel][:, None]
    img[sel] = img[sel] * (1.0 - c) + np.asarray(color, dtype=float) * c
    return img


def render(spec):
    """Draw the dial described by ``spec`` and its ground truth."""
    if not isinstance(spec, MeterSpec):
        raise InvalidSpecError("render expects a MeterSpec")
    S, r = spec.image_size, spec.dial_radius
    h = spec.distortion
    if h is not None and h == Homography.identity():
        h = None
    X, Y = _preimage_grid(S, h)
    c = spec.center.as_array()
    rng = np.random.default_rng(spec.seed)

    zero_pos = c + SCALE_RADIUS * r * _unit(spec.zero_angle)
    key_pos = c + SCALE_RADIUS * r * _unit(spec.zero_angle + spec.span_angle)
    tip = c + POINTER_LENGTH * r * _unit(spec.pointer_angle)

    # ground truth maps: hard-edged
    pointer_d = _seg_distance(X, Y, c, tip)
    pointer_gt = pointer_d <= POINTER_HALF_WIDTH
    d_zero = np.hypot(X - zero_pos[0], Y - zero_pos[1])
    d_key = np.hypot(X - key_pos[0], Y - key_pos[1])
    scales_gt = (d_zero <= SCALE_BLOB_RADIUS) | (d_key <= SCALE_BLOB_RADIUS)

    # display image: coverage-antialiased layers
    rr = np.hypot(X - c[0], Y - c[1])
    bg = 0.35 + _texture(X, Y, S, rng, 0.10)
    img = np.repeat(bg[..., None], 3, axis=2) * np.array([1.0, 0.97, 0.92])
    face = 0.92 + _texture(X, Y, S, rng, 0.04)
    img = _paint(img, _coverage(rr - r), 0.0)
    face_cov = _coverage(rr - (r - 3))[..., None]
    img = img * (1 - face_cov) + face[..., None] * face_cov
    n_ticks = 10
    ring = (rr > 0.75 * r) & (rr < 0.97 * r)
    tick_d = np.full(X.shape, np.inf)
    for k in range(n_ticks + 1):
        u = _unit(spec.zero_angle + spec.span_angle * k / n_ticks)
        inner = 0.80 if k % 5 == 0 else 0.85
        tick_d[ring] = np.minimum(
            tick_d[ring], _seg_distance(X[ring], Y[ring], c + inner * r * u, c + 0.95 * r * u)
        )
    img = _paint(img, _coverage(tick_d - 0.75), 0.15)
    img = _paint(img, _coverage(np.minimum(d_zero, d_key) - SCALE_BLOB_RADIUS), 0.05)
    label_r = 0.62 * r
    img = _paint(img, _glyph_coverage(X, Y, "0", c + label_r * _unit(spec.zero_angle)), 0.1)
    img = _paint(
        img,
        _glyph_coverage(X, Y, spec.key_number, c + label_r * _unit(spec.zero_angle + spec.span_angle)),
        0.1,
    )
    img = _paint(img, _coverage(pointer_d - POINTER_HALF_WIDTH), (0.75, 0.08, 0.08))
    img = _paint(img, _coverage(rr - 4.0), 0.2)
    image = ImageBuffer(np.clip(img, 0.0, 1.0))

    h_gt = Homography.identity() if h is None else h
    corners = frame_corners(S, S)
    moved = [project(h_gt, p) for p in corners]
    offsets = QuadOffsets([(m.x - p.x, m.y - p.y) for p, m in zip(corners, moved)])
    ann = MeterAnnotation(
        dial_center=project(h_gt, c),
        zero_scale=project(h_gt, zero_pos),
        key_scale=project(h_gt, key_pos),
        pointer_angle=spec.pointer_angle % 360.0,
        key_number=spec.key_number,
        true_reading=spec.pointer_fraction * parse_numeric(spec.key_number),
        correspondences=tuple(Correspondence(p, m) for p, m in zip(corners, moved)),
        offsets=offsets,
        h_gt=h_gt,
        image_size=S,
    )
    return SynthScene(
        image=image,
        pointer_map_gt=ScoreMap(pointer_gt.astype(float)),
        key_scale_map_gt=ScoreMap(scales_gt.astype(float)),
        annotation=ann,
        spec=spec,
    )


# ---------------------------------------------------------------------------
# random scenes

@dataclass(frozen=True)
class SpecRanges:
    """Inclusive ``(lo, hi)`` sampling ranges for :func:`random_spec`.

    ``dial_radius`` is a fraction of the image size; ``jitter`` bounds the
    corner displacement of the distortion as a fraction of the image size.
    """

    image_size: tuple = (256, 256)
    dial_radius: tuple = (0.30, 0.38)
    zero_angle: tuple = (0.0, 360.0)
    span_angle: tuple = (150.0, 300.0)
    pointer_fraction: tuple = (0.3, 1.0)
    key_numbers: tuple = KEY_NUMBERS
    jitter: float = 0.15

    def __post_init__(self):
        for f in ("image_size", "dial_radius", "zero_angle", "span_angle", "pointer_fraction"):
            lo, hi = getattr(self, f)
            if lo > hi:
                raise EmptyRangeError(f"empty range for {f}: ({lo}, {hi})")
        if not self.key_numbers:
            raise EmptyRangeError("key_numbers is empty")
        if not 0 <= self.jitter < 0.25:
            raise InvalidSpecError("jitter must lie in [0, 0.25)")


def random_jitter_homography(size, jitter, rng):
    """Distortion moving each corner by up to ``jitter * size`` per axis."""
    if jitter == 0:
        return Homography.identity()
    d = rng.uniform(-jitter * size, jitter * size, size=(4, 2))
    return offsets_to_homography(size, size, QuadOffsets(d))


def random_spec(seed, constraints=None):
    """Deterministic :class:`MeterSpec` drawn from ``constraints``."""
    rc = constraints if constraints is not None else SpecRanges()
    if isinstance(rc, dict):
        rc = SpecRanges(**rc)
    rng = np.random.default_rng(seed)
    size = int(rng.integers(rc.image_size[0], rc.image_size[1] + 1))
    radius = float(rng.uniform(*rc.dial_radius)) * size
    spec = MeterSpec(
        image_size=size,
        dial_radius=radius,
        zero_angle=float(rng.uniform(*rc.zero_angle)),
        span_angle=float(rng.uniform(*rc.span_angle)),
        pointer_fraction=float(rng.uniform(*rc.pointer_fraction)),
        key_number=str(rc.key_numbers[int(rng.integers(len(rc.key_numbers)))]),
        distortion=random_jitter_homography(size, rc.jitter, rng),
        seed=int(rng.integers(2**31)),
    )
    return spec


def synth_prob_matrix(text, alphabet=DEFAULT_ALPHABET, frames_per_symbol=2, confidence=0.9, rng=None):
    """A recognizer-like probability matrix whose best path spells ``text``.

    Each symbol occupies ``frames_per_symbol`` frames, separated by blank
    frames; the winning class gets ``confidence`` and the rest is spread
    randomly over the other classes.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    seq = [alphabet.blank_index]
    for k in alphabet.encode(text):
        seq += [k] * frames_per_symbol + [alphabet.blank_index]
    C = len(alphabet)
    rows = np.zeros((len(seq), C))
    for t, k in enumerate(seq):
        rest = rng.random(C)
        rest[k] = 0.0
        rows[t] = (1.0 - confidence) * rest / rest.sum()
        rows[t, k] = confidence
    return ProbMatrix(rows)


# ---------------------------------------------------------------------------
# scene files: <base>.png, <base>.pointer.pgm, <base>.keyscale.pgm, <base>.json

def write_scene(scene, directory, basename, probs=None):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_image(scene.image, d / f"{basename}.png")
    save_image(scene.pointer_map_gt, d / f"{basename}.pointer.pgm")
    save_image(scene.key_scale_map_gt, d / f"{basename}.keyscale.pgm")
    (d / f"{basename}.json").write_text(scene.annotation.to_json() + "\n")
    if probs is not None:
        (d / f"{basename}.probs.json").write_text(probs.to_json() + "\n")


@dataclass(frozen=True)
class SceneFiles:
    pointer_map: ScoreMap
    key_scale_map: ScoreMap
    annotation: MeterAnnotation
    image: Optional[ImageBuffer] = None
    probs: Optional[ProbMatrix] = None


def read_scene(prefix, with_image=False):
    """Load the files written by :func:`write_scene` for ``dir/basename``."""
    prefix = Path(prefix)
    base = lambda suffix: prefix.with_name(prefix.name + suffix)
    ann = MeterAnnotation.from_dict(json.loads(base(".json").read_text()))
    probs_path = base(".probs.json")
    return SceneFiles(
        pointer_map=ScoreMap(load_image(base(".pointer.pgm"))),
        key_scale_map=ScoreMap(load_image(base(".keyscale.pgm"))),
        annotation=ann,
        image=load_image(base(".png")) if with_image else None,
        probs=ProbMatrix.from_json(probs_path.read_text()) if probs_path.exists() else None,
    )
