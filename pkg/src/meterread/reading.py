"""Angle-method meter reading from pointer and key-scale score maps."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Point2
from .errors import (
    AmbiguousScalesError,
    DegenerateRayError,
    EmptyPointerError,
    InsufficientPixelsError,
    InsufficientScalesError,
    ZeroSpanError,
)
from .postproc import HoughLine, binarize, blobs, hough_line, thin

# a pointer this far "behind" the zero scale is read as sitting on it
ZERO_SNAP_DEG = 2.0
# pixels within this distance of the Hough line feed the anchored fit
POINTER_BAND = 3.0


@dataclass(frozen=True)
class DialFrame:
    """Rotation center and sweep direction of a dial.

    ``zero_hint``, when given, is an approximate zero-scale location; the
    detected scale blob nearest to it is taken as the zero scale.
    """

    center: Point2
    clockwise: bool = True
    zero_hint: Optional[Point2] = None


@dataclass(frozen=True)
class ReadingResult:
    value: float
    alpha1: float
    alpha2: float
    num_rec: float
    pointer: HoughLine
    zero_scale: Point2
    key_scale: Point2

    def to_dict(self):
        return {
            "value": self.value,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "num_rec": self.num_rec,
            "pointer": {"rho": self.pointer.rho, "theta": self.pointer.theta},
            "zero_scale": [self.zero_scale.x, self.zero_scale.y],
            "key_scale": [self.key_scale.x, self.key_scale.y],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(
            value=d["value"],
            alpha1=d["alpha1"],
            alpha2=d["alpha2"],
            num_rec=d["num_rec"],
            pointer=HoughLine(**d["pointer"]),
            zero_scale=Point2(*d["zero_scale"]),
            key_scale=Point2(*d["key_scale"]),
        )


def _bearing(center, p):
    dx, dy = p[0] - center[0], p[1] - center[1]
    if dx == 0 and dy == 0:
        raise DegenerateRayError(f"ray endpoint {tuple(p)} coincides with the center")
    return math.degrees(math.atan2(dy, dx))


def sweep_angle(center, frm, to, clockwise=True):
    """Degrees swept from ray center->frm to ray center->to.

    Clockwise is clockwise on screen, i.e. increasing ``atan2(y, x)`` in the
    y-down pixel frame.
    """
    d = _bearing(center, to) - _bearing(center, frm)
    if not clockwise:
        d = -d
    d %= 360.0
    # -tiny % 360 rounds up to 360.0
    return 0.0 if d >= 360.0 else d


def compute_reading(alpha1, alpha2, num_rec):
    if not alpha2 > 0:
        raise ZeroSpanError(f"alpha2 must be positive, got {alpha2}")
    if alpha1 < 0:
        raise ValueError(f"alpha1 must be nonnegative, got {alpha1}")
    return alpha1 / alpha2 * num_rec


def order_scales(a, b, frame):
    """Return (zero, key) among two scale centroids."""
    if frame.zero_hint is not None:
        da = math.dist(a, frame.zero_hint)
        db = math.dist(b, frame.zero_hint)
        return (a, b) if da <= db else (b, a)
    ab = sweep_angle(frame.center, a, b, frame.clockwise)
    ba = sweep_angle(frame.center, b, a, frame.clockwise)
    return (a, b) if ab <= ba else (b, a)


def pointer_direction(line, mask, center):
    """Unit vector from the center towards the pointer tip: the half-line
    holding more set pixels wins, ties go to the ``+direction`` half."""
    ys, xs = np.nonzero(mask.bits)
    d = line.direction
    s = (xs - center[0]) * d[0] + (ys - center[1]) * d[1]
    return d if np.count_nonzero(s > 0) >= np.count_nonzero(s < 0) else -d


def anchored_direction(line, mask, center, band=POINTER_BAND):
    """Tip direction of the pointer ray from ``center``, refined below the
    Hough bin size.

    Pixels within ``band`` of the Hough line are fitted by the least-squares
    direction of a line constrained to pass through ``center``; the half-line
    vote of :func:`pointer_direction` picks the tip side.
    """
    coarse = pointer_direction(line, mask, center)
    ys, xs = np.nonzero(mask.bits)
    nx, ny = line.normal
    near = np.abs(xs * nx + ys * ny - line.rho) <= band
    v = np.stack([xs[near] - center[0], ys[near] - center[1]], axis=1).astype(float)
    if len(v) < 2:
        return coarse
    w, vecs = np.linalg.eigh(v.T @ v)
    if w[1] <= w[0]:
        return coarse  # no preferred direction
    u = vecs[:, 1]
    return u if u @ coarse >= 0 else -u


def read_meter(pointer_map, key_scale_map, num_rec, frame, tau=0.5, theta_bins=180):
    """Full chain: threshold, thin, Hough, centroids, angle method."""
    pmask = binarize(pointer_map, tau)
    if pmask.count() < 2:
        raise EmptyPointerError(f"pointer map has {pmask.count()} pixels above {tau}")
    skeleton = thin(pmask)
    try:
        line = hough_line(skeleton, theta_bins=theta_bins)
    except InsufficientPixelsError:
        # a tiny stroke can thin to a single pixel
        line = hough_line(pmask, theta_bins=theta_bins)

    scales = blobs(binarize(key_scale_map, tau))
    if len(scales) < 2:
        raise InsufficientScalesError(f"need 2 scale blobs, found {len(scales)}")
    if len(scales) > 2:
        raise AmbiguousScalesError(f"expected exactly 2 scale blobs, found {len(scales)}")
    zero, key = order_scales(scales[0].centroid, scales[1].centroid, frame)

    c = frame.center
    tip_dir = anchored_direction(line, pmask, c)
    line = HoughLine.through(c, tip_dir)
    tip = Point2(c[0] + tip_dir[0], c[1] + tip_dir[1])
    alpha1 = sweep_angle(c, zero, tip, frame.clockwise)
    if 360.0 - alpha1 <= ZERO_SNAP_DEG:
        alpha1 = 0.0
    alpha2 = sweep_angle(c, zero, key, frame.clockwise)
    value = compute_reading(alpha1, alpha2, num_rec)
    return ReadingResult(
        value=value,
        alpha1=alpha1,
        alpha2=alpha2,
        num_rec=float(num_rec),
        pointer=line,
        zero_scale=Point2(float(zero[0]), float(zero[1])),
        key_scale=Point2(float(key[0]), float(key[1])),
    )
