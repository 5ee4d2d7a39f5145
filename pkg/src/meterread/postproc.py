"""Score map post-processing: threshold, Zhang-Suen thinning, Hough line
peak and 8-connected blob centroids."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import BinaryMask, Point2, ScoreMap
from .errors import InsufficientPixelsError

EIGHT = np.ones((3, 3), dtype=bool)
# Lu-Wang lower bound (plain Zhang-Suen uses 2); keeps 2-px diagonals alive
MIN_NEIGHBOURS = 3


@dataclass(frozen=True)
class HoughLine:
    """The line ``x cos(theta) + y sin(theta) = rho``, theta in [0, pi)."""

    rho: float
    theta: float

    @property
    def direction(self):
        """Unit vector along the line."""
        return np.array([-np.sin(self.theta), np.cos(self.theta)])

    @property
    def normal(self):
        return np.array([np.cos(self.theta), np.sin(self.theta)])

    def distance(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.normal - self.rho

    @classmethod
    def through(cls, point, direction):
        """The line through ``point`` along ``direction``, in normal form."""
        theta = float(np.arctan2(direction[0], -direction[1]) % np.pi)
        if theta >= np.pi:  # a tiny negative angle rounds up to pi
            theta = 0.0
        n = np.array([np.cos(theta), np.sin(theta)])
        return cls(float(np.asarray(point, dtype=float) @ n), theta)


@dataclass(frozen=True)
class Blob:
    centroid: Point2
    area: int


def _values(m):
    if isinstance(m, ScoreMap):
        return m.values
    return np.asarray(m, dtype=float)


def binarize(m, tau=0.5):
    """Set every pixel whose score is >= ``tau``."""
    return BinaryMask(_values(m) >= tau)


def _neighbours(p):
    """P2..P9 (clockwise from north) of every pixel of a zero-padded array."""
    return (
        p[:-2, 1:-1], p[:-2, 2:], p[1:-1, 2:], p[2:, 2:],
        p[2:, 1:-1], p[2:, :-2], p[1:-1, :-2], p[:-2, :-2],
    )


def _deletable(img, first):
    p = np.pad(img, 1).astype(np.uint8)
    n = _neighbours(p)
    p2, p3, p4, p5, p6, p7, p8, p9 = n
    b = sum(x.astype(np.int32) for x in n)
    seq = n + (p2,)
    a = sum(((seq[i] == 0) & (seq[i + 1] == 1)).astype(np.int32) for i in range(8))
    if first:
        c3 = (p2 & p4 & p6) == 0
        c4 = (p4 & p6 & p8) == 0
    else:
        c3 = (p2 & p4 & p8) == 0
        c4 = (p2 & p6 & p8) == 0
    return img & (b >= MIN_NEIGHBOURS) & (b <= 6) & (a == 1) & c3 & c4


def _keep_one_per_vanishing(img, delete):
    """Stop a subiteration from erasing a whole component (2x2 blocks are the
    classic case): the first pixel of such a component survives."""
    labels, n = ndimage.label(img, structure=EIGHT)
    if n == 0:
        return delete
    survivors = ndimage.sum_labels(img & ~delete, labels, index=np.arange(1, n + 1))
    gone = np.flatnonzero(survivors == 0) + 1
    if gone.size == 0:
        return delete
    delete = delete.copy()
    flat = labels.reshape(-1)
    for lab in gone:
        first = np.flatnonzero(flat == lab)[0]
        delete.reshape(-1)[first] = False
    return delete


def thin(m):
    """Zhang-Suen skeleton, iterated until neither subiteration changes it."""
    img = np.array(m.bits, dtype=bool)
    while True:
        changed = False
        for first in (True, False):
            delete = _keep_one_per_vanishing(img, _deletable(img, first))
            if delete.any():
                img &= ~delete
                changed = True
        if not changed:
            return BinaryMask(img)


def hough_accumulator(m, theta_bins=180, rho_resolution=1.0):
    """Vote array of shape ``(theta_bins, n_rho)`` plus the axis values.

    Each pixel splits its vote linearly between the two rho bins around its
    exact distance, so a rasterized line peaks at its own angle instead of
    tying with the neighbouring theta bins.
    """
    ys, xs = np.nonzero(m.bits)
    thetas = np.arange(theta_bins) * (np.pi / theta_bins)
    diag = np.hypot(m.width, m.height)
    r_max = int(np.ceil(diag / rho_resolution)) + 1
    rhos = np.arange(-r_max, r_max + 1) * rho_resolution
    acc = np.zeros((theta_bins, rhos.size))
    if xs.size:
        f = (np.outer(np.cos(thetas), xs) + np.outer(np.sin(thetas), ys)) / rho_resolution
        lo = np.floor(f)
        w_hi = f - lo
        lo = lo.astype(np.int64) + r_max
        for k in range(theta_bins):
            acc[k] = np.bincount(lo[k], weights=1.0 - w_hi[k], minlength=rhos.size)
            acc[k] += np.bincount(lo[k] + 1, weights=w_hi[k], minlength=rhos.size)
    return acc, thetas, rhos


def hough_line(m, theta_bins=180, rho_resolution=1.0):
    """Strongest line of a mask.

    Ties go to the smaller theta, then the smaller rho; row-major argmax over
    ``(theta, rho)`` gives exactly that order.
    """
    if m.count() < 2:
        raise InsufficientPixelsError(f"Hough needs >= 2 set pixels, got {m.count()}")
    acc, thetas, rhos = hough_accumulator(m, theta_bins, rho_resolution)
    k, r = np.unravel_index(int(np.argmax(acc)), acc.shape)
    return HoughLine(rho=float(rhos[r]), theta=float(thetas[k]))


def blobs(m):
    """8-connected components sorted by descending area, then by the
    row-major position of their first pixel."""
    labels, n = ndimage.label(m.bits, structure=EIGHT)
    if n == 0:
        return []
    flat = labels.reshape(-1)
    ys, xs = np.divmod(np.arange(flat.size), m.width)
    area = np.bincount(flat, minlength=n + 1)
    sx = np.bincount(flat, weights=xs, minlength=n + 1)
    sy = np.bincount(flat, weights=ys, minlength=n + 1)
    _, first = np.unique(flat, return_index=True)  # label 0 sits at first[0]
    if flat[0] != 0:
        first = np.concatenate(([-1], first))
    labs = sorted(range(1, n + 1), key=lambda k: (-area[k], first[k]))
    return [Blob(Point2(sx[k] / area[k], sy[k] / area[k]), int(area[k])) for k in labs]

