"""
Recognizing the key number with CTC
===================================

The number recognizer emits one probability distribution per time step over
the digits, '.', and a blank.  Greedy decoding takes the best class at each
step, merges repeats and drops blanks.  The training loss is the negative log
of the total probability of every path that collapses to the label, which a
small instance lets us check by brute force.
"""

import itertools
import math

import numpy as np

from meterread.ctc import DEFAULT_ALPHABET, ProbMatrix, brute_force_prob, ctc_loss, greedy_decode, parse_numeric
from meterread.synthmeter import synth_prob_matrix

print("alphabet:", DEFAULT_ALPHABET.symbols)

# a recognizer-like output that spells "2.5"
probs = synth_prob_matrix("2.5", rng=np.random.default_rng(0))
text = greedy_decode(probs)
print(f"{probs.T} steps decode to {text!r} -> {parse_numeric(text)}")

label = DEFAULT_ALPHABET.encode("2.5")
print(f"CTC loss of the right label: {ctc_loss(probs, label).value:.4f}")
print(f"CTC loss of '25':            {ctc_loss(probs, DEFAULT_ALPHABET.encode('25')).value:.4f}")

# tiny instance: 4 steps over {a, b, blank}, every path enumerated
rng = np.random.default_rng(1)
small = ProbMatrix(rng.dirichlet(np.ones(3), size=4))
for lab in ([0], [0, 1], [1, 1]):
    fwd = math.exp(-ctc_loss(small, lab).value)
    print(f"label {lab}: forward {fwd:.12f}, brute force {brute_force_prob(small, lab):.12f}")

# summed over every label (and the empty one) the probabilities make 1
total = math.prod(small.rows[:, 2])
for n in range(1, 5):
    total += sum(brute_force_prob(small, lab) for lab in itertools.product(range(2), repeat=n))
print("total probability over all labels:", total)
