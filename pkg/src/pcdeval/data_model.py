"""Detection records, IoU and the distance-sorted quality-score series."""

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidBoxError, PcdError, SchemaError

RAW_BOXES = "raw-boxes"
PRECOMPUTED = "precomputed"

SCHEMA_COLUMNS = {
    RAW_BOXES: (
        "frame_id", "distance_m",
        "gt_x1", "gt_y1", "gt_x2", "gt_y2",
        "pred_x1", "pred_y1", "pred_x2", "pred_y2",
        "confidence",
    ),
    PRECOMPUTED: ("frame_id", "distance_m", "iou", "confidence"),
}

# values outside [0, 1] by less than this are clamped, beyond it rejected
UNIT_TOLERANCE = 1e-9


def _unit_interval(value, name):
    value = float(value)
    if not math.isfinite(value) or value < -UNIT_TOLERANCE or value > 1 + UNIT_TOLERANCE:
        raise PcdError(f"{name} must lie in [0, 1], got {value!r}")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates.

    Corners given in either order are normalized so that ``x1 < x2`` and
    ``y1 < y2``; a box whose width or height is not positive afterwards is
    rejected. A missing prediction is ``None``, never a degenerate box.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        x1, y1, x2, y2 = (float(v) for v in (self.x1, self.y1, self.x2, self.y2))
        if not all(math.isfinite(v) for v in (x1, y1, x2, y2)):
            raise InvalidBoxError(f"non-finite box coordinates {(x1, y1, x2, y2)}")
        if x1 > x2:
            x1, x2 = x2, x1
        if y1 > y2:
            y1, y2 = y2, y1
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            raise InvalidBoxError(
                f"box {(x1, y1, x2, y2)} has non-positive width or height"
            )
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "y2", y2)

    @property
    def area(self):
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def compute_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(inter / union, 1.0)


def compute_quality_score(iou: float, confidence: float) -> float:
    """IoU x confidence. Both inputs must be in [0, 1] (within 1e-9)."""
    return _unit_interval(iou, "iou") * _unit_interval(confidence, "confidence")


@dataclass(frozen=True)
class DetectionRecord:
    """One frame: target distance, boxes, detector confidence and quality score.

    ``gt_box`` and ``pred_box`` are ``None`` for logs that carry a
    precomputed IoU. ``quality_score`` is 0 whenever the detection is missing.
    """

    frame_id: str
    distance_m: float
    confidence: float
    iou: float
    quality_score: float
    gt_box: Optional[BoundingBox] = None
    pred_box: Optional[BoundingBox] = None

    @classmethod
    def from_boxes(cls, frame_id, distance_m, gt_box, pred_box, confidence):
        distance_m = _distance(distance_m)
        if pred_box is None:
            conf = 0.0 if confidence is None else _unit_interval(confidence, "confidence")
            return cls(str(frame_id), distance_m, conf, 0.0, 0.0, gt_box, None)
        conf = _unit_interval(confidence, "confidence")
        iou = compute_iou(pred_box, gt_box)
        return cls(str(frame_id), distance_m, conf, iou,
                   compute_quality_score(iou, conf), gt_box, pred_box)

    @classmethod
    def from_iou(cls, frame_id, distance_m, iou, confidence):
        distance_m = _distance(distance_m)
        if iou is None or confidence is None:
            conf = 0.0 if confidence is None else _unit_interval(confidence, "confidence")
            return cls(str(frame_id), distance_m, conf, 0.0, 0.0)
        iou = _unit_interval(iou, "iou")
        conf = _unit_interval(confidence, "confidence")
        return cls(str(frame_id), distance_m, conf, iou, iou * conf)


def _distance(value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise PcdError(f"distance_m must be finite and >= 0, got {value!r}")
    return value


def _parse_float(text, line, field, optional=False, unit=False):
    text = text.strip()
    if text == "":
        if optional:
            return None
        raise SchemaError("missing value", line=line, field=field)
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"not a number: {text!r}", line=line, field=field) from None
    if not math.isfinite(value):
        raise SchemaError(f"non-finite value {text!r}", line=line, field=field)
    if unit:
        try:
            value = _unit_interval(value, field)
        except PcdError as exc:
            raise SchemaError(str(exc), line=line, field=field) from None
    elif field == "distance_m" and value < 0:
        raise SchemaError(f"negative distance {value!r}", line=line, field=field)
    return value


def _parse_box(values, line, field):
    try:
        return BoundingBox(*values)
    except InvalidBoxError as exc:
        raise SchemaError(str(exc), line=line, field=field) from None


def _parse_raw_row(row, line):
    cols = SCHEMA_COLUMNS[RAW_BOXES]
    distance = _parse_float(row[1], line, "distance_m")
    gt = _parse_box([_parse_float(row[i], line, cols[i]) for i in range(2, 6)], line, "gt_x1")
    pred_vals = [_parse_float(row[i], line, cols[i], optional=True) for i in range(6, 10)]
    confidence = _parse_float(row[10], line, "confidence", optional=True, unit=True)
    if all(p is None for p in pred_vals):
        pred = None
    elif any(p is None for p in pred_vals):
        missing = cols[6 + pred_vals.index(None)]
        raise SchemaError("partially empty prediction box", line=line, field=missing)
    else:
        pred = _parse_box(pred_vals, line, "pred_x1")
        if confidence is None:
            raise SchemaError("missing value", line=line, field="confidence")
    return DetectionRecord.from_boxes(row[0], distance, gt, pred, confidence)


def _parse_precomputed_row(row, line):
    distance = _parse_float(row[1], line, "distance_m")
    iou = _parse_float(row[2], line, "iou", optional=True, unit=True)
    conf = _parse_float(row[3], line, "confidence", optional=True, unit=True)
    return DetectionRecord.from_iou(row[0], distance, iou, conf)


_ROW_PARSERS = {RAW_BOXES: _parse_raw_row, PRECOMPUTED: _parse_precomputed_row}


def parse_detection_log(source, schema):
    """Read a detection log in one of the two CSV schemas.

    Parameters
    ----------
    source : str, bytes, or file-like
        CSV text, UTF-8 bytes, or an open text/binary stream.
    schema : {'raw-boxes', 'precomputed'}
        Declared column layout. The header must match it exactly.

    Returns
    -------
    list of DetectionRecord
        One record per data row, in file order.

    Raises
    ------
    SchemaError
        Unknown schema, header mismatch, or a malformed row. The error
        carries the 1-based line number and the column name.
    """
    if schema not in SCHEMA_COLUMNS:
        raise SchemaError(f"unknown schema {schema!r}; expected one of {sorted(SCHEMA_COLUMNS)}")
    text = _read_text(source)
    expected = SCHEMA_COLUMNS[schema]
    parse_row = _ROW_PARSERS[schema]

    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None:
        raise SchemaError("empty input, expected header " + ",".join(expected), line=1)
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    if tuple(header) != expected:
        raise SchemaError(
            f"header {','.join(header)!r} does not match {schema} schema "
            f"{','.join(expected)!r}",
            line=1,
        )

    records = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(expected):
            raise SchemaError(f"expected {len(expected)} fields, got {len(row)}", line=line)
        records.append(parse_row(row, line))
    return records


def _read_text(source):
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


class DistanceSeries:
    """Quality scores ordered by strictly increasing distance.

    Attributes
    ----------
    x : numpy.ndarray
        Distances in meters, strictly increasing. Read-only.
    y : numpy.ndarray
        Quality scores in [0, 1]. Read-only.
    """

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        x = np.array(x, dtype=float).ravel()
        y = np.array(y, dtype=float).ravel()
        if x.size < 1:
            raise PcdError("a series needs at least one point")
        if x.shape != y.shape:
            raise PcdError(f"x and y lengths differ ({x.size} vs {y.size})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise PcdError("series values must be finite")
        if np.any(np.diff(x) <= 0):
            raise PcdError("series distances must be strictly increasing")
        if np.any(y < 0) or np.any(y > 1):
            raise PcdError("series scores must lie in [0, 1]")
        x.flags.writeable = False
        y.flags.writeable = False
        self.x = x
        self.y = y

    @property
    def n(self):
        return self.x.size

    def __len__(self):
        return self.x.size

    def __repr__(self):
        return f"DistanceSeries(n={self.n}, x=[{self.x[0]:g}, {self.x[-1]:g}])"

    def __eq__(self, other):
        if not isinstance(other, DistanceSeries):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None


def build_series(records: Sequence[DetectionRecord]) -> DistanceSeries:
    """Sort records by distance and average the scores of equal distances."""
    if len(records) == 0:
        raise PcdError("cannot build a series from zero records")
    dist = np.array([r.distance_m for r in records], dtype=float)
    score = np.array([r.quality_score for r in records], dtype=float)
    x, inverse = np.unique(dist, return_inverse=True)
    sums = np.zeros(x.size)
    counts = np.zeros(x.size)
    np.add.at(sums, inverse, score)
    np.add.at(counts, inverse, 1.0)
    y = np.clip(sums / counts, 0.0, 1.0)
    return DistanceSeries(x, y)
