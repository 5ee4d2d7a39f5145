"""Projective point mapping and four-point homography estimation.

A :class:`Homography` is always stored in canonical form: unit Frobenius
norm with the first nonzero entry (row-major) positive.  That makes two
matrices describing the same projective map compare equal up to rounding.

Alignment convention: the matrix produced by :func:`offsets_to_homography`
maps the corners of a frame onto the displaced corners; warping samples the
source through the inverse of whatever matrix is handed to the warper.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import Point2, _restore
from .errors import (
    DegenerateConfigurationError,
    InvalidImageError,
    NonInvertibleHomographyError,
    PointAtInfinityError,
    SingularSystemError,
)

HORIZON_EPS = 1e-12
DET_EPS = 1e-12
# entries below this magnitude are treated as zero when fixing the sign
SIGN_EPS = 1e-12


def canonicalize(m):
    m = np.asarray(m, dtype=np.float64).reshape(3, 3)
    norm = np.linalg.norm(m)
    if not np.isfinite(norm) or norm == 0.0:
        raise NonInvertibleHomographyError("zero or non-finite matrix")
    m = m / norm
    flat = m.reshape(-1)
    nz = np.flatnonzero(np.abs(flat) > SIGN_EPS)
    if nz.size and flat[nz[0]] < 0:
        m = -m
    return m


class Homography:
    """3x3 projective map in canonical form."""

    __slots__ = ("m",)

    def __init__(self, m):
        c = canonicalize(m)
        if abs(np.linalg.det(c)) <= DET_EPS:
            raise NonInvertibleHomographyError(f"|det| = {abs(np.linalg.det(c)):.3e}")
        c.setflags(write=False)
        object.__setattr__(self, "m", c)

    def __setattr__(self, name, value):
        raise AttributeError("Homography is immutable")

    def __reduce__(self):
        return _restore, (type(self), "m", self.m)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx, ty):
        return cls([[1, 0, tx], [0, 1, ty], [0, 0, 1]])

    @classmethod
    def scaling(cls, sx, sy=None):
        return cls(np.diag([sx, sx if sy is None else sy, 1.0]))

    def inverse(self):
        return Homography(np.linalg.inv(self.m))

    def __matmul__(self, other):
        """Composition: ``(a @ b)`` applies ``b`` first."""
        return Homography(self.m @ other.m)

    def max_abs_diff(self, other):
        return float(np.max(np.abs(self.m - other.m)))

    def __eq__(self, other):
        if not isinstance(other, Homography):
            return NotImplemented
        return bool(np.array_equal(self.m, other.m))

    __hash__ = None

    def __repr__(self):
        rows = "; ".join(" ".join(f"{v:.6g}" for v in r) for r in self.m)
        return f"Homography([{rows}])"

    def to_json(self):
        return json.dumps({"h": [float(v) for v in self.m.reshape(-1)]})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        h = obj["h"]
        if len(h) != 9:
            raise ValueError("homography JSON needs nine numbers under 'h'")
        return cls(np.array(h, dtype=float).reshape(3, 3))


@dataclass(frozen=True)
class Correspondence:
    src: Point2
    dst: Point2

    def __post_init__(self):
        if not np.all(np.isfinite([*self.src, *self.dst])):
            raise ValueError("correspondence coordinates must be finite")


@dataclass(frozen=True)
class QuadOffsets:
    """Corner displacements in TL, TR, BR, BL order, shape ``(4, 2)``."""

    d: tuple

    def __post_init__(self):
        a = np.asarray(self.d, dtype=float)
        if a.shape != (4, 2) or not np.all(np.isfinite(a)):
            raise ValueError("offsets must be four finite (dx, dy) pairs")
        object.__setattr__(self, "d", tuple(tuple(float(v) for v in row) for row in a))

    @classmethod
    def zeros(cls):
        return cls(np.zeros((4, 2)))

    def as_array(self):
        return np.array(self.d, dtype=float)

    def to_json(self):
        return json.dumps({"offsets": [list(p) for p in self.d]})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        return cls(obj["offsets"])


@dataclass(frozen=True)
class EllipseParams:
    center: Point2
    a: float
    b: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")


def _cross(o, p, q):
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])


def _segments_cross(p1, p2, p3, p4):
    d1, d2 = _cross(p3, p4, p1), _cross(p3, p4, p2)
    d3, d4 = _cross(p1, p2, p3), _cross(p1, p2, p4)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True)
class Quad:
    """Four vertices in TL, TR, BR, BL order."""

    tl: Point2
    tr: Point2
    br: Point2
    bl: Point2

    def __post_init__(self):
        pts = self.vertices()
        if has_collinear_triple(pts):
            raise DegenerateConfigurationError("quad has three collinear vertices")
        if _segments_cross(pts[0], pts[1], pts[2], pts[3]) or _segments_cross(
            pts[1], pts[2], pts[3], pts[0]
        ):
            raise DegenerateConfigurationError("quad is self-intersecting")

    def vertices(self):
        return [Point2(*map(float, p)) for p in (self.tl, self.tr, self.br, self.bl)]


def frame_corners(w, h):
    """Pixel-center corners of a ``w`` x ``h`` raster, TL, TR, BR, BL."""
    return [Point2(0.0, 0.0), Point2(w - 1.0, 0.0), Point2(w - 1.0, h - 1.0), Point2(0.0, h - 1.0)]


def project(h, p):
    """Map ``p`` through ``h``; raises at the horizon line."""
    m = h.m
    if abs(m[2, 2]) > HORIZON_EPS:
        m = m / m[2, 2]  # affine maps then project without rounding drift
    u, v = float(p[0]), float(p[1])
    w = m[2, 0] * u + m[2, 1] * v + m[2, 2]
    if abs(w) <= HORIZON_EPS:
        raise PointAtInfinityError(f"point ({u}, {v}) maps to infinity")
    x = m[0, 0] * u + m[0, 1] * v + m[0, 2]
    y = m[1, 0] * u + m[1, 1] * v + m[1, 2]
    return Point2(float(x / w), float(y / w))


def project_many(h, pts):
    """Vectorized :func:`project` over an ``(n, 2)`` array; rows at the
    horizon come back as NaN."""
    pts = np.asarray(pts, dtype=float)
    hom = pts @ h.m[:, :2].T + h.m[:, 2]
    w = hom[:, 2]
    out = np.full((len(pts), 2), np.nan)
    ok = np.abs(w) > HORIZON_EPS
    out[ok] = hom[ok, :2] / w[ok, None]
    return out


def has_collinear_triple(pts, tol=1e-9):
    """True when any three points are (nearly) collinear.

    The test is scale-free: twice the triangle area is compared against the
    squared length of its longest side.
    """
    pts = [np.asarray(p, dtype=float) for p in pts]
    for a, b, c in itertools.combinations(pts, 3):
        longest = max(np.sum((a - b) ** 2), np.sum((b - c) ** 2), np.sum((a - c) ** 2))
        if longest == 0.0 or abs(_cross(a, b, c)) <= tol * longest:
            return True
    return False


def _hartley(pts):
    c = pts.mean(axis=0)
    d = np.mean(np.linalg.norm(pts - c, axis=1))
    if d == 0.0:
        raise DegenerateConfigurationError("coincident points")
    s = np.sqrt(2.0) / d
    T = np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])
    return (pts - c) * s, T


def solve_dlt(corrs):
    """Homography from exactly four point correspondences.

    Both point sets are isotropically normalized, the 8x9 system is solved
    through its SVD null vector, and the result is denormalized.
    """
    corrs = list(corrs)
    if len(corrs) != 4:
        raise ValueError(f"solve_dlt needs exactly 4 correspondences, got {len(corrs)}")
    src = np.array([c.src for c in corrs], dtype=float)
    dst = np.array([c.dst for c in corrs], dtype=float)
    if has_collinear_triple(src) or has_collinear_triple(dst):
        raise DegenerateConfigurationError("three of the four points are collinear")

    s, Ts = _hartley(src)
    d, Td = _hartley(dst)
    A = np.zeros((8, 9))
    for i, ((x, y), (u, v)) in enumerate(zip(s, d)):
        A[2 * i] = [x, y, 1, 0, 0, 0, -u * x, -u * y, -u]
        A[2 * i + 1] = [0, 0, 0, x, y, 1, -v * x, -v * y, -v]
    try:
        _, sv, vt = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from None
    # rank 8 is required for a unique null vector
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularSystemError("correspondence system has rank < 8")
    hn = vt[-1].reshape(3, 3)
    m = np.linalg.inv(Td) @ hn @ Ts
    try:
        return Homography(m)
    except NonInvertibleHomographyError as exc:
        raise SingularSystemError(str(exc)) from None


def ellipse_alignment_pairs(e):
    """Axis endpoints of an ellipse paired with the matching circumcircle points.

    Order: +major, -major, +minor, -minor.  The major direction is
    ``(cos phi, sin phi)`` and the minor one ``(-sin phi, cos phi)`` in the
    y-down pixel frame.
    """
    cx, cy = float(e.center[0]), float(e.center[1])
    major = np.array([np.cos(e.phi), np.sin(e.phi)])
    minor = np.array([-np.sin(e.phi), np.cos(e.phi)])
    pairs = []
    for direction, r_src in ((major, e.a), (-major, e.a), (minor, e.b), (-minor, e.b)):
        src = Point2(cx + r_src * direction[0], cy + r_src * direction[1])
        dst = Point2(cx + e.a * direction[0], cy + e.a * direction[1])
        pairs.append(Correspondence(src, dst))
    return pairs


def quad_alignment_pairs(q, out_w, out_h):
    """Quad vertices paired with the corners of an ``out_w`` x ``out_h`` image."""
    if out_w < 2 or out_h < 2:
        raise InvalidImageError("output size must be at least 2x2")
    return [Correspondence(s, d) for s, d in zip(q.vertices(), frame_corners(out_w, out_h))]


def offsets_to_homography(frame_w, frame_h, d):
    """Homography sending each frame corner to ``corner + offset``."""
    corners = frame_corners(frame_w, frame_h)
    off = d.as_array() if isinstance(d, QuadOffsets) else np.asarray(d, dtype=float)
    if not np.any(off):
        return Homography.identity()
    pairs = [
        Correspondence(c, Point2(c.x + dx, c.y + dy)) for c, (dx, dy) in zip(corners, off)
    ]
    return solve_dlt(pairs)


def homography_to_offsets(frame_w, frame_h, h):
    """Inverse of :func:`offsets_to_homography`."""
    corners = frame_corners(frame_w, frame_h)
    return QuadOffsets([tuple(np.subtract(project(h, c), c)) for c in corners])
