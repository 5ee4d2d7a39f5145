"""Reading-accuracy indicators and a mask overlap score.

The two error averages are accumulated in exact rational arithmetic over the
shortest decimal form of each input, so hand-checkable record sets such as
``p=1.1, g=1.0`` give exactly ``10.0`` rather than ``10.000000000000009``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, NonPositiveRangeError, ZeroGroundTruthError


@dataclass(frozen=True)
class EvalRecord:
    predicted: float
    ground_truth: float
    range: float

    def __post_init__(self):
        if not self.range > 0:
            raise NonPositiveRangeError(f"range must be positive, got {self.range}")


def _q(x):
    return Fraction(repr(float(x)))


def _check(records):
    records = list(records)
    if not records:
        raise EmptyInputError("no records to evaluate")
    return records


def avg_relative_error(records):
    """Mean of ``|p - g| / g`` in percent."""
    records = _check(records)
    total = Fraction(0)
    for r in records:
        if r.ground_truth == 0:
            raise ZeroGroundTruthError("relative error is undefined for g = 0")
        total += abs(_q(r.predicted) - _q(r.ground_truth)) / _q(r.ground_truth)
    return float(total * 100 / len(records))


def avg_reference_error(records):
    """Mean of ``|p - g| / R`` in percent."""
    records = _check(records)
    total = Fraction(0)
    for r in records:
        if not r.range > 0:
            raise NonPositiveRangeError(f"range must be positive, got {r.range}")
        total += abs(_q(r.predicted) - _q(r.ground_truth)) / _q(r.range)
    return float(total * 100 / len(records))


def evaluate(records):
    records = _check(records)
    return {
        "rel_percent": avg_relative_error(records),
        "ref_percent": avg_reference_error(records),
        "n": len(records),
    }


def load_records(path):
    """Read JSON-lines with keys ``predicted``, ``ground_truth``, ``range``."""
    out = []
    with open(path) as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                out.append(EvalRecord(float(d["predicted"]), float(d["ground_truth"]), float(d["range"])))
    return out


def dump_records(records, path):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def mask_iou(a, b):
    """Intersection over union of two masks, 1.0 when both are empty."""
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatchError(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    union = np.count_nonzero(a.bits | b.bits)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.bits & b.bits) / union
