"""Iterative-convolution-filter decomposition, outlier features and SVM-RFE ranking
for physiological interval series."""

from .config import RunConfig
from .decompose import Decomposition, Mask, build_mask, decompose, extract_mode, lowpass
from .featurize import FeatureId, feature_name, featurize_subject, outlier_stats, parse_feature_name
from .ingest import Cohort, TimeSeries, read_manifest, read_rr
from .select import FeatureMatrix, predict, stability_rank, svm_rfe, train_linear_svm

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "Decomposition", "Mask", "build_mask", "decompose", "extract_mode", "lowpass",
    "FeatureId", "feature_name", "featurize_subject", "outlier_stats", "parse_feature_name",
    "Cohort", "TimeSeries", "read_manifest", "read_rr",
    "FeatureMatrix", "predict", "stability_rank", "svm_rfe", "train_linear_svm",
]
