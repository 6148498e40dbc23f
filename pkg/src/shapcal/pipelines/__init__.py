"""Experimental scenarios built on the valuation core."""
from .active import STRATEGIES, ActiveRunReport, active_learning_run
from .online import OnlineRunReport, online_run
from .regressor import (RegressorConfig, RegressorError, ValueRegressor, predict_values,
                        train_value_regressor)
from .removal import (BOTTOM, NEGATIVE, MislabelAnalysis, RemovalPolicy, apply_removal,
                      mislabel_analysis, select_removed)
from .tasks import BlobTask, blob_task

__all__ = [
    "STRATEGIES", "ActiveRunReport", "active_learning_run", "OnlineRunReport", "online_run",
    "RegressorConfig", "RegressorError", "ValueRegressor", "predict_values",
    "train_value_regressor", "BOTTOM", "NEGATIVE", "MislabelAnalysis", "RemovalPolicy",
    "apply_removal", "mislabel_analysis", "select_removed", "BlobTask", "blob_task",
]
