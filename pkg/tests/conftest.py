import numpy as np
import pytest

from meterread.core import BinaryMask

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mask_from_strings(rows):
    return BinaryMask(np.array([[c == "#" for c in r] for r in rows]))


def central_diff(f, x, step=1e-4):
    """Numerical gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g


def max_rel_err(analytic, numeric, floor=1e-6):
    a, n = np.ravel(analytic), np.ravel(numeric)
    den = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / den))


def random_ctc_instance(rng, max_t=6, max_c=5):
    """Random (ProbMatrix, feasible label) with T <= max_t, C <= max_c."""
    from meterread.ctc import ProbMatrix, min_frames

    while True:
        T = int(rng.integers(1, max_t + 1))
        C = int(rng.integers(2, max_c + 1))
        n = int(rng.integers(1, T + 1))
        label = [int(k) for k in rng.integers(0, C - 1, size=n)]
        if min_frames(label) <= T:
            break
    y = rng.dirichlet(np.ones(C), size=T)
    return ProbMatrix(y), label
