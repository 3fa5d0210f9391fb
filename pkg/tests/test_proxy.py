"""Delay-to-AP degradation curves and the scene-level proxy estimate."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2vaoi.aoi import AoIRecord
from v2vaoi.errors import DomainError, SceneParseError
from v2vaoi.proxy import (
    BACKBONE_CURVE,
    CONSTANT_TRANSMISSION_CURVE,
    DEFAULT_CURVES,
    DegradationCurve,
    estimate_ap,
    estimate_scene_ap,
    load_curve,
    save_curve,
)


def record_with_age(age, link=(0, 1)):
    return AoIRecord(
        link=link,
        comm_delay_s=age,
        compute_delay_s=0.0,
        total_delay_s=age,
        snapped_age_s=age,
        timestamp_offset=round(age / 0.1),
    )


def test_every_sample_reproduced_bit_exactly():
    for curve in DEFAULT_CURVES.values():
        for row in curve.samples:
            assert estimate_ap(curve, row[0]) == (row[1], row[2], row[3])


def test_backbone_midpoint_interpolation():
    ap = estimate_ap(BACKBONE_CURVE, 0.05)
    assert ap == pytest.approx((0.8595, 0.784, 0.4765), rel=1e-12)


def test_clamps_beyond_last_sample():
    assert estimate_ap(BACKBONE_CURVE, 2.0) == (0.039, 0.024, 0.015)
    assert estimate_ap(CONSTANT_TRANSMISSION_CURVE, 99.0) == (0.500, 0.332, 0.196)


def test_negative_delay_rejected():
    with pytest.raises(DomainError):
        estimate_ap(BACKBONE_CURVE, -0.1)


@settings(max_examples=200, deadline=None)
@given(delay=st.floats(min_value=0.0, max_value=3.0))
def test_interpolation_preserves_iou_ordering(delay):
    for curve in DEFAULT_CURVES.values():
        ap30, ap50, ap70 = estimate_ap(curve, delay)
        assert ap30 >= ap50 >= ap70
        assert 0.0 <= ap70 and ap30 <= 1.0


@settings(max_examples=100, deadline=None)
@given(
    lo=st.floats(min_value=0.0, max_value=3.0),
    hi=st.floats(min_value=0.0, max_value=3.0),
)
def test_interpolation_monotone_non_increasing(lo, hi):
    if lo > hi:
        lo, hi = hi, lo
    for curve in DEFAULT_CURVES.values():
        a = estimate_ap(curve, lo)
        b = estimate_ap(curve, hi)
        assert all(x >= y - 1e-12 for x, y in zip(a, b))


def test_curve_validation_rejects_bad_data():
    with pytest.raises(DomainError):
        DegradationCurve("bad", [[0.0, 0.5, 0.6, 0.4]])  # ap30 < ap50
    with pytest.raises(DomainError):
        DegradationCurve("bad", [[0.0, 0.9, 0.8, 0.7], [0.1, 0.95, 0.8, 0.7]])
    with pytest.raises(DomainError):
        DegradationCurve("bad", [[0.1, 0.9, 0.8, 0.7], [0.1, 0.9, 0.8, 0.7]])
    with pytest.raises(DomainError):
        DegradationCurve("bad", [[0.0, 1.2, 0.8, 0.7]])


# --- scene estimate ------------------------------------------------------------


def test_scene_all_fresh():
    est = estimate_scene_ap([record_with_age(0.0), record_with_age(0.0, (1, 0))])
    assert (est.ap30, est.ap50, est.ap70) == (0.864, 0.859, 0.805)


def test_scene_uniform_delay_uses_constant_curve():
    records = [record_with_age(0.2), record_with_age(0.2, (1, 0))]
    est = estimate_scene_ap(records)
    assert est.age_spread_s == 0.0
    assert (est.ap30, est.ap50, est.ap70) == (0.750, 0.481, 0.227)


def test_scene_spread_takes_entrywise_minimum():
    # mean 0.1 scores (0.860, 0.810, 0.435); spread 0.5 scores (0.643, 0.440, 0.253)
    records = [
        record_with_age(0.5),
        record_with_age(0.0, (1, 0)),
        record_with_age(0.0, (1, 2)),
        record_with_age(0.0, (2, 1)),
        record_with_age(0.0, (2, 0)),
    ]
    est = estimate_scene_ap(records)
    assert est.mean_age_s == pytest.approx(0.1)
    assert est.age_spread_s == pytest.approx(0.5)
    assert (est.ap30, est.ap50, est.ap70) == pytest.approx((0.643, 0.440, 0.253))
    assert est.constant_component == pytest.approx((0.860, 0.810, 0.435))
    assert "proxy" in est.label


def test_scene_estimate_rejects_empty():
    with pytest.raises(DomainError):
        estimate_scene_ap([])


# --- files ----------------------------------------------------------------------


def test_curve_file_round_trip(tmp_path):
    path = tmp_path / "curve.txt"
    save_curve(BACKBONE_CURVE, path)
    loaded = load_curve(path)
    assert loaded.delay_type == "backbone"
    np.testing.assert_array_equal(loaded.samples, BACKBONE_CURVE.samples)


def test_curve_file_parse(tmp_path):
    path = tmp_path / "curve.txt"
    path.write_text("# my measurements\ntype custom_stack\n0 0.9 0.8 0.7\n0.5 0.5 0.4 0.3\n")
    curve = load_curve(path)
    assert curve.delay_type == "custom_stack"
    assert estimate_ap(curve, 0.0) == (0.9, 0.8, 0.7)


def test_curve_file_errors(tmp_path):
    path = tmp_path / "curve.txt"
    path.write_text("0 0.9 0.8\n")
    with pytest.raises(SceneParseError):
        load_curve(path)
    path.write_text("")
    with pytest.raises(SceneParseError):
        load_curve(path)
    with pytest.raises(SceneParseError):
        load_curve("/nonexistent/curve.txt")
