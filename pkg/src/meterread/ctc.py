"""CTC loss (log-space forward-backward), greedy decoding and a
brute-force path enumerator used as an independent check."""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass

import numpy as np

from .core import _restore
from .errors import (
    InfeasibleLabelError,
    InstanceTooLargeError,
    MalformedProbMatrixError,
    UnparseableNumberError,
)
from .losses import LossValue

BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple
    blank_index: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")
        if not 0 <= self.blank_index < len(self.symbols):
            raise ValueError("blank_index out of range")

    def __len__(self):
        return len(self.symbols)

    def encode(self, text):
        lookup = {s: i for i, s in enumerate(self.symbols)}
        try:
            return tuple(lookup[ch] for ch in text)
        except KeyError as exc:
            raise ValueError(f"token {exc.args[0]!r} not in alphabet") from None


# ten digits, the decimal point, and the blank (the network's END token)
DEFAULT_ALPHABET = Alphabet(tuple("0123456789.") + ("<blank>",), blank_index=11)


class ProbMatrix:
    """``T`` x ``C`` matrix of per-timestep class distributions."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        a = np.array(rows, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 2:
            raise MalformedProbMatrixError(f"need a T x C matrix (C >= 2), got shape {a.shape}")
        if not np.all(np.isfinite(a)) or a.min() < 0.0 or a.max() > 1.0:
            raise MalformedProbMatrixError("entries must be finite probabilities")
        if np.max(np.abs(a.sum(axis=1) - 1.0)) > 1e-9:
            raise MalformedProbMatrixError("rows must sum to 1 within 1e-9")
        a.setflags(write=False)
        object.__setattr__(self, "rows", a)

    def __setattr__(self, name, value):
        raise AttributeError("ProbMatrix is immutable")

    def __reduce__(self):
        return _restore, (type(self), "rows", self.rows)

    @property
    def T(self):
        return self.rows.shape[0]

    @property
    def C(self):
        return self.rows.shape[1]

    def to_json(self):
        return json.dumps({"T": self.T, "C": self.C, "rows": self.rows.tolist()})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        pm = cls(obj["rows"])
        if pm.T != obj["T"] or pm.C != obj["C"]:
            raise MalformedProbMatrixError("T/C fields disagree with rows")
        return pm

    @classmethod
    def from_logits(cls, logits):
        z = np.asarray(logits, dtype=float)
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return cls(e / e.sum(axis=1, keepdims=True))


def min_frames(label):
    """Shortest T that can emit ``label``: one frame per symbol plus a blank
    between each adjacent repeat."""
    return len(label) + sum(1 for a, b in zip(label, label[1:]) if a == b)


def _check_label(label, C, blank):
    label = tuple(int(k) for k in label)
    if len(label) == 0:
        raise InfeasibleLabelError("label must be non-empty")
    for k in label:
        if k == blank or not 0 <= k < C:
            raise InfeasibleLabelError(f"label index {k} is blank or out of range")
    return label


def _blank(blank, C):
    return C - 1 if blank is None else blank


def ctc_loss(probs, label, blank=None):
    """Negative log-likelihood of ``label`` under ``probs``.

    ``blank`` defaults to the last class.  The gradient is with respect to
    every entry of the probability matrix.
    """
    y = probs.rows
    T, C = y.shape
    blank = _blank(blank, C)
    label = _check_label(label, C, blank)
    if T < min_frames(label):
        raise InfeasibleLabelError(f"label of length {len(label)} needs T >= {min_frames(label)}, got {T}")

    ext = [blank]
    for k in label:
        ext += [k, blank]
    ext = np.array(ext)
    S = ext.size
    # skip transition s-2 -> s allowed onto a non-blank that differs from s-2
    skip = np.zeros(S, dtype=bool)
    skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])

    with np.errstate(divide="ignore"):
        logy = np.log(y[:, ext])  # (T, S)
    neg = -np.inf

    def lse(*terms):
        return np.logaddexp.reduce(np.stack(terms), axis=0)

    # alpha_pre: mass arriving at (t, s) before emitting y_t
    alpha_pre = np.full((T, S), neg)
    alpha = np.full((T, S), neg)
    alpha_pre[0, :2] = 0.0
    alpha[0] = alpha_pre[0] + logy[0]
    for t in range(1, T):
        prev = alpha[t - 1]
        shift1 = np.concatenate(([neg], prev[:-1]))
        shift2 = np.where(skip, np.concatenate(([neg, neg], prev[:-2])), neg)
        alpha_pre[t] = lse(prev, shift1, shift2)
        alpha[t] = alpha_pre[t] + logy[t]

    # beta: mass of completing the path from (t, s) after y_t was emitted
    beta = np.full((T, S), neg)
    beta[T - 1, S - 1] = 0.0
    if S > 1:
        beta[T - 1, S - 2] = 0.0
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1] + logy[t + 1]
        stay = nxt
        step1 = np.concatenate((nxt[1:], [neg]))
        skip_next = np.concatenate((skip[2:], [False, False]))
        step2 = np.where(skip_next, np.concatenate((nxt[2:], [neg, neg])), neg)
        beta[t] = lse(stay, step1, step2)

    log_p = np.logaddexp(alpha[T - 1, S - 1], alpha[T - 1, S - 2] if S > 1 else neg)
    grad = np.zeros((T, C))
    if not np.isfinite(log_p):
        return LossValue(float("inf"), grad)
    # dp/dy[t, k] = sum over s with ext[s] == k of alpha_pre * beta
    occ = np.exp(alpha_pre + beta - log_p)
    for s in range(S):
        grad[:, ext[s]] -= occ[:, s]
    return LossValue(float(-log_p), grad)


def collapse(path, blank):
    """Merge repeats, then drop blanks."""
    out = []
    prev = None
    for k in path:
        if k != prev and k != blank:
            out.append(k)
        prev = k
    return tuple(out)


def brute_force_prob(probs, label, blank=None):
    """Sum of the probabilities of every length-T path collapsing to
    ``label``; only practical for tiny instances."""
    y = probs.rows
    T, C = y.shape
    if C**T > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{C}^{T} paths exceed {BRUTE_FORCE_LIMIT}")
    blank = _blank(blank, C)
    target = tuple(int(k) for k in label)
    total = 0.0
    for path in itertools.product(range(C), repeat=T):
        if collapse(path, blank) == target:
            total += float(np.prod(y[np.arange(T), path]))
    return total


def greedy_decode(probs, alphabet=DEFAULT_ALPHABET):
    """Best-path decoding; argmax ties resolve to the lowest class index."""
    best = np.argmax(probs.rows, axis=1)
    return "".join(alphabet.symbols[k] for k in collapse(best.tolist(), alphabet.blank_index))


_NUMBER = re.compile(r"\d+(?:\.\d+)?")


def parse_numeric(decoded):
    if not _NUMBER.fullmatch(decoded or ""):
        raise UnparseableNumberError(f"not a decimal number: {decoded!r}")
    return float(decoded)
