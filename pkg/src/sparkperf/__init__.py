"""Performance prediction for Spark applications.

Completion-time models (NNLS on Ernest features, LASSO, MLP, CART, random
forest) fitted on a-priori or DAG-derived features, evaluated under core
interpolation and data extrapolation splits.
"""

from .data import KMEANS, PROFILES, QUERY26, SPARKDL, Dataset, FeatureMatrix, RunRecord, StageMetrics, WorkloadProfile
from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    FeatureError,
    LogParseError,
    RunValidationError,
    SparkPerfError,
    SplitError,
)
from .evaluation import ComparisonTable, EvaluationReport, ExperimentSpec, compare_models, mape, run_experiment
from .features import FeatureSetKind, build_matrix, impute_dag_features
from .models import ModelFamily, fit_model, predict
from .scenarios import ScenarioFamily, ScenarioSplit, apply_split, build_splits
from .synthgen import ErnestLaw, GenerativeLaw, IrregularLaw, generate_runs
from .tuning import HoldOut, KFold, grid_search

__version__ = "0.1.0"

__all__ = [
    "KMEANS", "PROFILES", "QUERY26", "SPARKDL", "Dataset", "FeatureMatrix", "RunRecord", "StageMetrics",
    "WorkloadProfile", "ConfigError", "DataError", "DivergenceError", "FeatureError", "LogParseError",
    "RunValidationError", "SparkPerfError", "SplitError", "ComparisonTable", "EvaluationReport", "ExperimentSpec",
    "compare_models", "mape", "run_experiment", "FeatureSetKind", "build_matrix", "impute_dag_features",
    "ModelFamily", "fit_model", "predict", "ScenarioFamily", "ScenarioSplit", "apply_split", "build_splits",
    "ErnestLaw", "GenerativeLaw", "IrregularLaw", "generate_runs", "HoldOut", "KFold", "grid_search",
]
