import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcdeval import (BoundingBox, DetectionRecord, DistanceSeries, InvalidBoxError, PcdError,
                     SchemaError, build_series, compute_iou, compute_quality_score,
                     parse_detection_log)

from oracles import iou_exact

RAW_HEADER = "frame_id,distance_m,gt_x1,gt_y1,gt_x2,gt_y2,pred_x1,pred_y1,pred_x2,pred_y2,confidence"
PRE_HEADER = "frame_id,distance_m,iou,confidence"


def test_iou_identical():
    box = BoundingBox(0, 0, 10, 10)
    assert compute_iou(box, box) == 1.0


def test_iou_disjoint():
    assert compute_iou(BoundingBox(0, 0, 1, 1), BoundingBox(2, 2, 3, 3)) == 0.0


def test_iou_partial_overlap():
    # intersection 1, union 4 + 4 - 1
    assert compute_iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 1, 3, 3)) == pytest.approx(1 / 7, abs=1e-15)


def test_iou_touching_edges_is_zero():
    assert compute_iou(BoundingBox(0, 0, 1, 1), BoundingBox(1, 0, 2, 1)) == 0.0


def test_box_corner_order_normalized():
    box = BoundingBox(10, 20, 0, 5)
    assert (box.x1, box.y1, box.x2, box.y2) == (0, 5, 10, 20)


@pytest.mark.parametrize("coords", [(0, 0, 0, 5), (1, 1, 5, 1), (0, 0, float("nan"), 1)])
def test_degenerate_box_rejected(coords):
    with pytest.raises(InvalidBoxError):
        BoundingBox(*coords)


boxes = st.tuples(*[st.integers(-50, 50)] * 4).filter(lambda c: c[0] != c[2] and c[1] != c[3])


@given(boxes, boxes)
@settings(max_examples=300)
def test_iou_properties(a, b):
    ba, bb = BoundingBox(*a), BoundingBox(*b)
    v = compute_iou(ba, bb)
    assert v == compute_iou(bb, ba)
    assert 0.0 <= v <= 1.0
    assert compute_iou(ba, ba) == 1.0
    assert abs(v - float(iou_exact(a, b))) <= 1e-12


@pytest.mark.parametrize("iou, conf, expected", [(1.0, 1.0, 1.0), (0.0, 0.9, 0.0), (0.5, 0.8, 0.4)])
def test_quality_score(iou, conf, expected):
    assert compute_quality_score(iou, conf) == pytest.approx(expected, abs=1e-15)


def test_quality_score_tolerance():
    assert compute_quality_score(1.0, 1 + 5e-10) == 1.0
    assert compute_quality_score(0.5, -5e-10) == 0.0
    with pytest.raises(PcdError):
        compute_quality_score(0.5, 1.01)
    with pytest.raises(PcdError):
        compute_quality_score(-0.1, 0.5)


def test_parse_raw_row():
    text = RAW_HEADER + "\nf1,50.0,100,100,200,200,100,100,200,200,0.9\n"
    (rec,) = parse_detection_log(text, "raw-boxes")
    assert rec.iou == 1.0
    assert rec.quality_score == pytest.approx(0.9)
    assert rec.distance_m == 50.0
    assert rec.frame_id == "f1"


def test_parse_precomputed_row():
    (rec,) = parse_detection_log(PRE_HEADER + "\nf2,120.5,0.6,0.5\n", "precomputed")
    assert rec.quality_score == pytest.approx(0.30, abs=1e-15)


def test_parse_missing_prediction():
    text = RAW_HEADER + "\nf3,80,0,0,10,10,,,,,\nf4,81,0,0,10,10,,,,,0.7\n"
    recs = parse_detection_log(text.encode("utf-8"), "raw-boxes")
    assert [r.quality_score for r in recs] == [0.0, 0.0]
    assert all(r.pred_box is None for r in recs)
    (rec,) = parse_detection_log(PRE_HEADER + "\nf5,10,,\n", "precomputed")
    assert rec.quality_score == 0.0


def test_parse_stream_and_blank_lines():
    text = PRE_HEADER + "\r\na,1,0.5,0.5\r\n\r\nb,2,1,1\r\n"
    recs = parse_detection_log(io.BytesIO(text.encode()), "precomputed")
    assert [r.frame_id for r in recs] == ["a", "b"]


@pytest.mark.parametrize("body, line, field", [
    ("f1,abc,0.5,0.5", 2, "distance_m"),
    ("f1,1,0.5,0.5\nf2,2,1.5,0.5", 3, "iou"),
    ("f1,1,0.5,2", 2, "confidence"),
    ("f1,-3,0.5,0.5", 2, "distance_m"),
    ("f1,1,0.5", 2, None),
])
def test_parse_errors_carry_location(body, line, field):
    with pytest.raises(SchemaError) as err:
        parse_detection_log(PRE_HEADER + "\n" + body + "\n", "precomputed")
    assert err.value.line == line
    assert err.value.field == field


def test_parse_partial_prediction_box():
    with pytest.raises(SchemaError) as err:
        parse_detection_log(RAW_HEADER + "\nf,1,0,0,1,1,0,0,,1,0.5\n", "raw-boxes")
    assert err.value.field == "pred_x2"


def test_parse_header_and_schema_checks():
    with pytest.raises(SchemaError) as err:
        parse_detection_log("", "precomputed")
    assert err.value.line == 1
    with pytest.raises(SchemaError) as err:
        parse_detection_log(PRE_HEADER + "\n", "raw-boxes")
    assert err.value.line == 1
    with pytest.raises(SchemaError):
        parse_detection_log(PRE_HEADER + "\n", "yolo")


def _rec(d, y):
    return DetectionRecord.from_iou("f", d, y, 1.0)


def test_build_series_sorts():
    s = build_series([_rec(30, 0.1), _rec(10, 0.2), _rec(20, 0.3)])
    assert s.x.tolist() == [10, 20, 30]
    assert s.y.tolist() == [0.2, 0.3, 0.1]


def test_build_series_averages_duplicates():
    s = build_series([_rec(50, 0.4), _rec(50, 0.6)])
    assert s.n == 1
    assert s.x[0] == 50 and s.y[0] == pytest.approx(0.5)


def test_build_series_single_and_empty():
    assert build_series([_rec(5, 0.5)]).n == 1
    with pytest.raises(PcdError):
        build_series([])


@given(st.lists(st.tuples(st.integers(0, 30), st.floats(0, 1)), min_size=1, max_size=60))
def test_build_series_invariants(pairs):
    s = build_series([_rec(d, y) for d, y in pairs])
    assert np.all(np.diff(s.x) > 0)
    assert s.n == len({d for d, _ in pairs})
    assert np.all((s.y >= 0) & (s.y <= 1))


def test_record_score_bounded_by_components(rng):
    for _ in range(200):
        gt = BoundingBox(*rng.integers(0, 20, 2), *rng.integers(21, 40, 2))
        pred = BoundingBox(*rng.integers(0, 20, 2), *rng.integers(21, 40, 2))
        rec = DetectionRecord.from_boxes("f", 1.0, gt, pred, rng.random())
        assert rec.quality_score <= rec.confidence
        assert rec.quality_score <= rec.iou


def test_series_is_read_only():
    s = DistanceSeries([1, 2, 3], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        s.y[0] = 1.0
    with pytest.raises(PcdError):
        DistanceSeries([1, 1], [0.1, 0.2])
