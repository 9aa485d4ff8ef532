"""Perception Characteristics Distance: distance-dependent reliability of object detectors."""

__version__ = "0.1.0"

from .changepoint import ChangePointResult, ChangePointTest, critical_threshold, detect_all, \
    detect_single, sic_statistic, split_log_likelihood
from .data_model import BoundingBox, DetectionRecord, DistanceSeries, build_series, \
    compute_iou, compute_quality_score, parse_detection_log
from .errors import InvalidBoxError, PcdError, SchemaError, WindowTooSmallError
from .pcd import PcdSurface, SegmentModel, ThresholdGrid, build_segment_model, compute_pcd, \
    compute_pcd_surface, exceedance_probability, mean_pcd, mean_quality_score
from .spline_fit import FittedCurve, SplineConfig, build_basis, evaluate, fit_penalized, \
    select_lambda
from .synth import SynthSpec, brute_force_pcd, brute_force_sic_scan, generate
