import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meterread.errors import DimensionMismatchError, InvalidWeightError
from meterread.geometry import QuadOffsets
from meterread.losses import (
    LossValue,
    component_loss,
    dice_loss,
    mse_offsets,
    ohem_bce,
    ohem_select,
    total_loss,
)

from conftest import central_diff, max_rel_err
from gradcases import CASES


def lv(x):
    return LossValue(x, np.zeros(1))


def test_mse_examples():
    z = QuadOffsets.zeros()
    r = mse_offsets(z, z)
    assert r.value == 0 and not r.grad.any()
    one = QuadOffsets(np.eye(1, 8).reshape(4, 2))
    r = mse_offsets(one, z)
    assert r.value == 1 and r.grad.ravel().tolist() == [2, 0, 0, 0, 0, 0, 0, 0]
    tenth = QuadOffsets((np.arange(1, 9) / 10).reshape(4, 2))
    assert mse_offsets(tenth, z).value == pytest.approx(math.fsum((i / 10) ** 2 for i in range(1, 9)), abs=1e-15)
    assert mse_offsets(tenth, z).value == pytest.approx(2.04, abs=1e-12)


def test_dice_examples():
    eps = 1e-6
    assert dice_loss([1, 0, 1, 0], [1, 0, 1, 0]).value == pytest.approx(1 - 4 / (4 + eps), abs=1e-15)
    assert dice_loss([1, 0, 1, 0], [1, 0, 1, 0]).value < 1e-6
    assert dice_loss([1, 1], [1, 0]).value == pytest.approx(1 / 3, abs=1e-6)
    assert dice_loss([0.5, 0.5], [1, 1]).value == pytest.approx(0.2, abs=1e-6)
    with pytest.raises(DimensionMismatchError):
        dice_loss(np.zeros((2, 2)), np.zeros((2, 3)))


def test_component_examples():
    for lam in (0.1, 0.4, 0.9):
        assert component_loss(lv(0.3), lv(0.3), lam).value == pytest.approx(0.3, abs=1e-15)
    assert component_loss(lv(1.0), lv(0.0)).value == 0.4
    assert component_loss(lv(0.2), lv(0.6)).value == pytest.approx(0.44, abs=1e-15)
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidWeightError):
            component_loss(lv(0.1), lv(0.1), bad)


def test_ohem_examples():
    gt = np.array([[1.0, 0.0], [0.0, 1.0]])
    perfect = ohem_bce(gt, gt)
    assert perfect.value <= -math.log(1 - 1e-7) + 1e-15
    r = ohem_bce([0.5, 0.5, 0.5, 0.5], [1, 0, 0, 0])
    assert r.value == pytest.approx(math.log(2), abs=1e-15)


def test_ohem_selection_matches_subset_brute_force(rng):
    for _ in range(10):
        pred = rng.permutation(np.linspace(0.01, 0.99, 11))
        gt = np.zeros(11)
        pos = int(rng.integers(11))
        gt[pos] = 1
        got = ohem_select(pred, gt, 3)
        negs = [i for i in range(11) if i != pos]
        # among all 3-subsets of negatives the kept one has the largest score sum
        best = max(itertools.combinations(negs, 3), key=lambda s: sum(pred[list(s)]))
        assert set(np.flatnonzero(got)) == {pos, *best}
        assert np.count_nonzero(ohem_bce(pred, gt).grad) == 4


def test_ohem_zero_positive_fallback():
    pred = np.linspace(0, 1, 250)
    keep = ohem_select(pred, np.zeros(250))
    assert np.flatnonzero(keep).tolist() == [248, 249]
    keep = ohem_select(np.full(20, 0.3), np.zeros(20))
    assert np.flatnonzero(keep).tolist() == [0]


def test_ohem_large_ratio_is_plain_bce(rng):
    pred = rng.uniform(0.01, 0.99, size=(4, 4))
    gt = (rng.random((4, 4)) < 0.3).astype(float)
    gt[0, 0] = 1
    y, p = gt.ravel(), pred.ravel()
    plain = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert ohem_bce(pred, gt, neg_ratio=16).value == pytest.approx(plain, rel=1e-12)


def test_total_examples():
    assert total_loss(lv(0.0), lv(0.0), lv(0.0)).value == 0.0
    assert total_loss(lv(0.1), lv(0.2), lv(0.3)).value == 0.6


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=3, max_size=3))
def test_total_permutation_invariant(vals):
    outs = {total_loss(*map(lv, perm)).value for perm in itertools.permutations(vals)}
    assert len(outs) == 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dice_symmetric_on_binary(seed):
    r = np.random.default_rng(seed)
    a = (r.random(16) < 0.5).astype(float)
    b = (r.random(16) < 0.5).astype(float)
    a[0] = 1
    assert dice_loss(a, b).value == dice_loss(b, a).value


@pytest.mark.parametrize("name", sorted(CASES))
def test_gradients_match_central_differences(name, rng):
    for _ in range(5):
        f, x0, grad = CASES[name](rng)
        num = central_diff(f, x0, step=1e-4)
        assert grad.shape == num.shape
        assert max_rel_err(grad, num) < 1e-4


def test_losses_nonnegative_and_finite(rng):
    for name, make in CASES.items():
        f, x0, grad = make(rng)
        assert f(x0) >= 0 and np.isfinite(f(x0))
        assert np.all(np.isfinite(grad))
