"""Inverse-mapping image warp with bilinear sampling and zero padding."""
from __future__ import annotations

import numpy as np

from .geometry import HORIZON_EPS, Homography


def _bilinear(plane, xs, ys):
    """Sample a 2-D array at float coordinates; outside the pixel-center
    hull ``[0, w-1] x [0, h-1]`` the result is 0."""
    h, w = plane.shape
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    inside = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    xc = np.where(inside, xs, 0.0)
    yc = np.where(inside, ys, 0.0)
    x0 = np.minimum(np.floor(xc).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(yc).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    top = plane[y0, x0] * (1 - fx) + plane[y0, x1] * fx
    bot = plane[y1, x0] * (1 - fx) + plane[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    return np.where(inside, out, 0.0)


def bilinear_sample(img, x, y, ch=0):
    """Bilinear value of channel ``ch`` at continuous position ``(x, y)``."""
    if not 0 <= ch < img.channels:
        raise IndexError(f"channel {ch} out of range for {img.channels}-channel image")
    return float(_bilinear(img.channel(ch), x, y))


def sample_grid(img, xs, ys):
    """Bilinear samples of every channel at arrays of coordinates.

    Returns an array of shape ``xs.shape + (channels,)``.
    """
    return np.stack([_bilinear(img.channel(c), xs, ys) for c in range(img.channels)], axis=-1)


def warp_image(img, h, out_w, out_h):
    """Resample ``img`` so that output pixel ``q`` takes the value at
    ``h^-1(q)`` in the source."""
    if not isinstance(h, Homography):
        h = Homography(h)
    hinv = np.linalg.inv(h.m)
    if abs(hinv[2, 2]) > HORIZON_EPS:
        # keeps affine maps (identity in particular) exact in floating point
        hinv = hinv / hinv[2, 2]
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(float)
    den = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    ok = np.abs(den) > HORIZON_EPS
    safe = np.where(ok, den, 1.0)
    u = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / safe
    v = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / safe
    u = np.where(ok, u, -1.0)
    v = np.where(ok, v, -1.0)
    out = sample_grid(img, u, v)
    np.clip(out, 0.0, 1.0, out=out)
    return type(img)(out)
