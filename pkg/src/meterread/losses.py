"""Training objectives with analytic gradients.

Each function returns a :class:`LossValue`.  For single-input losses the
gradient has the prediction's shape; combined losses concatenate the flat
gradients of their inputs in argument order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BinaryMask, ImageBuffer, check_same_shape
from .errors import DimensionMismatchError, InvalidWeightError
from .geometry import QuadOffsets

DICE_EPS = 1e-6
PROB_CLAMP = 1e-7
COMPONENT_LAMBDA = 0.4
OHEM_NEG_RATIO = 3


@dataclass(frozen=True)
class LossValue:
    value: float
    grad: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grad, dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("loss gradient has non-finite entries")
        object.__setattr__(self, "grad", g)


def _arr(x):
    if isinstance(x, ImageBuffer):
        return x.pixels[:, :, 0] if x.channels == 1 else x.pixels
    if isinstance(x, BinaryMask):
        return x.bits.astype(float)
    if isinstance(x, QuadOffsets):
        return x.as_array()
    return np.asarray(x, dtype=float)


def mse_offsets(pred, gt):
    """Sum (not mean) of squared corner-offset errors."""
    p, g = _arr(pred), _arr(gt)
    check_same_shape(p, g)
    r = p - g
    return LossValue(float(np.sum(r * r)), 2.0 * r)


def dice_loss(p, g, eps=DICE_EPS):
    """``1 - 2 sum(PG) / (sum(P^2) + sum(G^2) + eps)``."""
    p, g = _arr(p), _arr(g)
    if p.shape != g.shape:
        raise DimensionMismatchError(f"prediction {p.shape} vs target {g.shape}")
    inter = np.sum(p * g)
    den = np.sum(p * p) + np.sum(g * g) + eps
    value = 1.0 - 2.0 * inter / den
    grad = (4.0 * inter * p - 2.0 * g * den) / (den * den)
    return LossValue(float(value), grad)


def component_loss(l_pm, l_ksm, lam=COMPONENT_LAMBDA):
    """``lam * pointer + (1 - lam) * key_scale``; weight must lie in (0, 1)."""
    if not 0.0 < lam < 1.0:
        raise InvalidWeightError(f"lambda must lie in (0, 1), got {lam}")
    value = lam * l_pm.value + (1.0 - lam) * l_ksm.value
    grad = np.concatenate([lam * l_pm.grad.ravel(), (1.0 - lam) * l_ksm.grad.ravel()])
    return LossValue(float(value), grad)


def ohem_select(pred, gt, neg_ratio=OHEM_NEG_RATIO):
    """Boolean mask of the pixels kept by online hard example mining.

    All positives are kept together with the ``neg_ratio * #pos`` negatives
    scoring highest; with no positives, the hardest 1% of negatives (at
    least one).  Equal scores are ordered by raster position.
    """
    if neg_ratio < 1:
        raise ValueError("neg_ratio must be >= 1")
    p, y = _arr(pred), _arr(gt) > 0.5
    check_same_shape(p, y)
    flat_p, flat_y = p.ravel(), y.ravel()
    n_pos = int(flat_y.sum())
    neg_idx = np.flatnonzero(~flat_y)
    k = n_pos * neg_ratio if n_pos else max(1, flat_p.size // 100)
    k = min(k, neg_idx.size)
    hardest = neg_idx[np.argsort(-flat_p[neg_idx], kind="stable")[:k]]
    keep = flat_y.copy()
    keep[hardest] = True
    return keep.reshape(p.shape)


def ohem_bce(pred, gt, neg_ratio=OHEM_NEG_RATIO, selection=None):
    """Mean binary cross-entropy over the OHEM selection.

    Pass ``selection`` to hold the selected set fixed (gradient checks do).
    """
    p, y = _arr(pred), _arr(gt)
    if p.shape != y.shape:
        raise DimensionMismatchError(f"prediction {p.shape} vs target {y.shape}")
    y = (y > 0.5).astype(float)
    omega = ohem_select(p, y, neg_ratio) if selection is None else np.asarray(selection, bool)
    n = int(omega.sum())
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    ce = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    value = float(np.sum(ce[omega]) / n) if n else 0.0
    inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    dce = -y / pc + (1.0 - y) / (1.0 - pc)
    grad = np.where(omega & inside, dce, 0.0) / max(n, 1)
    return LossValue(value, grad)


def total_loss(l_com, l_num_det, l_num_reco):
    """Unweighted sum of the three branch losses (correctly rounded, so the
    result does not depend on argument order)."""
    value = math.fsum((l_com.value, l_num_det.value, l_num_reco.value))
    grad = np.concatenate([l.grad.ravel() for l in (l_com, l_num_det, l_num_reco)])
    return LossValue(float(value), grad)
