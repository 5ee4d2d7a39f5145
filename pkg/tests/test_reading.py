import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meterread.core import Point2, ScoreMap
from meterread.errors import (
    AmbiguousScalesError,
    DegenerateRayError,
    EmptyPointerError,
    InsufficientScalesError,
    ZeroSpanError,
)
from meterread.reading import DialFrame, ReadingResult, compute_reading, order_scales, read_meter, sweep_angle
from meterread.synthmeter import MeterSpec, render


def complex_sweep(c, a, b, clockwise):
    """Oracle via complex division, independent of the atan2 path."""
    za = complex(a[0] - c[0], a[1] - c[1])
    zb = complex(b[0] - c[0], b[1] - c[1])
    d = math.degrees(cmath.phase(zb / za))
    return (d if clockwise else -d) % 360.0


def test_sweep_examples():
    assert sweep_angle((0, 0), (1, 0), (1, 0)) == 0.0
    assert sweep_angle((0, 0), (1, 0), (0, 1), clockwise=True) == 90.0
    assert sweep_angle((0, 0), (1, 0), (0, 1), clockwise=False) == 270.0
    with pytest.raises(DegenerateRayError):
        sweep_angle((1, 1), (1, 1), (0, 0))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_sweep_matches_complex_oracle(seed, cw):
    rng = np.random.default_rng(seed)
    c, a, b = rng.uniform(-10, 10, size=(3, 2))
    got = sweep_angle(c, a, b, cw)
    want = complex_sweep(c, a, b, cw)
    diff = abs(got - want)
    assert min(diff, 360 - diff) < 1e-9
    assert 0 <= got < 360


def test_compute_reading_examples():
    assert compute_reading(0, 123.0, 3.0) == 0.0
    assert compute_reading(270, 270, 3.0) == 3.0
    assert compute_reading(45, 90, 3.0) == 1.5
    with pytest.raises(ZeroSpanError):
        compute_reading(10, 0, 1.0)


@settings(max_examples=200, deadline=None)
# subnormal inputs lose bits under scaling, so stay in the normal range
@given(
    st.one_of(st.just(0.0), st.floats(1e-6, 359)),
    st.floats(0.5, 359),
    st.one_of(st.just(0.0), st.floats(1e-3, 100)),
    st.integers(-20, 20),
)
def test_reading_homogeneous(a1, a2, num, k):
    s = 2.0**k
    assert compute_reading(a1, a2, num * s) == compute_reading(a1, a2, num) * s


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 359), st.floats(0, 359), st.floats(0.5, 359), st.floats(0, 100))
def test_reading_monotone(x, y, a2, num):
    lo, hi = sorted((x, y))
    assert compute_reading(lo, a2, num) <= compute_reading(hi, a2, num)


def test_order_scales_unordered_rule():
    c = Point2(0, 0)
    a, b = Point2(-1, 0), Point2(0, -1)  # clockwise a->b is 90
    assert order_scales(a, b, DialFrame(c)) == (a, b)
    assert order_scales(b, a, DialFrame(c)) == (a, b)
    assert order_scales(a, b, DialFrame(c, clockwise=False)) == (b, a)
    assert order_scales(a, b, DialFrame(c, zero_hint=Point2(0.1, -0.9))) == (b, a)


def scene(**kw):
    spec = MeterSpec(**{"image_size": 200, "dial_radius": 80.0, "zero_angle": 135.0, "span_angle": 170.0, **kw})
    return render(spec)


def frame_for(sc, hint=True, clockwise=True):
    a = sc.annotation
    return DialFrame(a.dial_center, clockwise, a.zero_scale if hint else None)


def test_pointer_at_zero_scale():
    sc = scene(pointer_fraction=0.0, key_number="3.0")
    r = read_meter(sc.pointer_map_gt, sc.key_scale_map_gt, 3.0, frame_for(sc))
    assert abs(r.value) <= 0.005 * 3.0


def test_pointer_at_key_scale():
    sc = scene(pointer_fraction=1.0, key_number="3.0")
    r = read_meter(sc.pointer_map_gt, sc.key_scale_map_gt, 3.0, frame_for(sc))
    assert abs(r.value - 3.0) <= 0.005 * 3.0


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.8])
def test_read_without_hint_small_span(frac):
    sc = scene(pointer_fraction=frac, key_number="10")
    r = read_meter(sc.pointer_map_gt, sc.key_scale_map_gt, 10.0, frame_for(sc, hint=False))
    assert r.value == pytest.approx(10 * frac, rel=0.01)


def test_fields_recompose_exactly():
    sc = scene(pointer_fraction=0.4, key_number="2.5")
    r = read_meter(sc.pointer_map_gt, sc.key_scale_map_gt, 2.5, frame_for(sc))
    assert r.value == r.alpha1 / r.alpha2 * r.num_rec
    assert 0 <= r.alpha1 < 360 and 0 < r.alpha2 < 360
    back = ReadingResult.from_dict(__import__("json").loads(r.to_json()))
    assert back == r
    assert set(r.to_dict()) == {"value", "alpha1", "alpha2", "num_rec", "pointer", "zero_scale", "key_scale"}


@pytest.mark.parametrize("frac", [0.2, 0.55, 0.9])
def test_mirror_symmetry(frac):
    sc = scene(pointer_fraction=frac, key_number="1.0", zero_angle=120.0)
    r = read_meter(sc.pointer_map_gt, sc.key_scale_map_gt, 1.0, frame_for(sc))
    w = sc.pointer_map_gt.width
    pm = ScoreMap(sc.pointer_map_gt.values[:, ::-1])
    km = ScoreMap(sc.key_scale_map_gt.values[:, ::-1])
    a = sc.annotation
    mframe = DialFrame(
        Point2(w - 1 - a.dial_center.x, a.dial_center.y),
        clockwise=False,
        zero_hint=Point2(w - 1 - a.zero_scale.x, a.zero_scale.y),
    )
    rm = read_meter(pm, km, 1.0, mframe)
    assert rm.value == pytest.approx(r.value, abs=0.005)
    assert rm.value == pytest.approx(frac, abs=0.01)


def test_error_paths():
    sc = scene()
    empty = ScoreMap(np.zeros((200, 200)))
    with pytest.raises(EmptyPointerError):
        read_meter(empty, sc.key_scale_map_gt, 1.0, frame_for(sc))
    one = np.zeros((200, 200))
    one[10:14, 10:14] = 1
    with pytest.raises(InsufficientScalesError):
        read_meter(sc.pointer_map_gt, ScoreMap(one), 1.0, frame_for(sc))
    three = sc.key_scale_map_gt.values.copy()
    three[5:8, 5:8] = 1
    with pytest.raises(AmbiguousScalesError):
        read_meter(sc.pointer_map_gt, ScoreMap(three), 1.0, frame_for(sc))
