"""Momentum analysis for point-by-point tennis match data.

TOPSIS closeness scores per point, logistic regression tests of point
outcomes, key-game swing prediction and Spearman/PCA factor screening.
"""

from .ingest import (
    FeatureTable,
    KeyGameRule,
    MatchDataset,
    PointRecord,
    build_features,
    encode_score,
    one_hot_encode,
    parse_match_csv,
    select_key_games,
    write_match_csv,
)
from .logreg import (
    ConfusionMatrix,
    InferenceTable,
    LogisticModel,
    TrainConfig,
    confusion,
    fit,
    gradient,
    loss,
    predict,
    sigmoid,
    wald_inference,
)
from .stats import CorrelationReport, PcaResult, correlation_matrix, pca, spearman, top_factors
from .topsis import (
    DecisionMatrix,
    MomentumSeries,
    TopsisResult,
    WeightVector,
    closeness,
    distances,
    evaluate,
    ideal_vectors,
    momentum_series,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "build_features",
    "closeness",
    "confusion",
    "ConfusionMatrix",
    "correlation_matrix",
    "CorrelationReport",
    "DecisionMatrix",
    "distances",
    "encode_score",
    "evaluate",
    "FeatureTable",
    "fit",
    "gradient",
    "ideal_vectors",
    "InferenceTable",
    "KeyGameRule",
    "LogisticModel",
    "loss",
    "MatchDataset",
    "momentum_series",
    "MomentumSeries",
    "normalize",
    "one_hot_encode",
    "parse_match_csv",
    "pca",
    "PcaResult",
    "PointRecord",
    "predict",
    "select_key_games",
    "sigmoid",
    "spearman",
    "top_factors",
    "TopsisResult",
    "TrainConfig",
    "wald_inference",
    "WeightVector",
    "write_match_csv",
]
