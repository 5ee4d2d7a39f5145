"""
The training objectives and their gradients
===========================================

Each loss returns its value together with the analytic gradient with respect
to the prediction.  Central differences confirm every gradient.
"""

import numpy as np

from meterread.ctc import DEFAULT_ALPHABET, ctc_loss
from meterread.geometry import QuadOffsets
from meterread.losses import component_loss, dice_loss, mse_offsets, ohem_bce, ohem_select, total_loss
from meterread.synthmeter import synth_prob_matrix

rng = np.random.default_rng(3)


def numeric_grad(f, x, step=1e-4):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


# corner offsets: a plain sum of squared errors over the 8 components
pred = QuadOffsets(rng.normal(size=(4, 2)))
gt = QuadOffsets.zeros()
align = mse_offsets(pred, gt)
print(f"alignment loss {align.value:.4f}")

# dice loss on a 4x4 pointer map and key-scale map, mixed 0.4 / 0.6
p_map, g_map = rng.uniform(0.05, 0.95, (4, 4)), (rng.random((4, 4)) < 0.4).astype(float)
k_map, gk_map = rng.uniform(0.05, 0.95, (4, 4)), (rng.random((4, 4)) < 0.2).astype(float)
l_pm, l_ksm = dice_loss(p_map, g_map), dice_loss(k_map, gk_map)
com = component_loss(l_pm, l_ksm)
print(f"pointer dice {l_pm.value:.4f}, key-scale dice {l_ksm.value:.4f}, component {com.value:.4f}")
num = numeric_grad(lambda x: dice_loss(x, g_map).value, p_map)
print("dice gradient max abs error:", np.max(np.abs(num - l_pm.grad)))

# number detection: cross-entropy over all positives plus the hardest
# negatives, three per positive
score = rng.uniform(0.05, 0.95, (6, 6))
target = np.zeros((6, 6))
target[2, 2:4] = 1
keep = ohem_select(score, target)
det = ohem_bce(score, target, selection=keep)
print(f"OHEM keeps {keep.sum()} of {keep.size} pixels, loss {det.value:.4f}")
num = numeric_grad(lambda x: ohem_bce(x, target, selection=keep).value, score)
print("OHEM gradient max abs error:", np.max(np.abs(num - det.grad)))

# the total is the unweighted sum of the component, detection and
# recognition branches
reco = ctc_loss(synth_prob_matrix("1.6"), DEFAULT_ALPHABET.encode("1.6"))
print(f"total {total_loss(com, det, reco).value:.4f}")
