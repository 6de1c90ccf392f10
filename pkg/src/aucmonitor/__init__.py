"""Windowed AUC monitoring with DeLong variance and a class-count adjusted Kalman filter."""

from ._backend import BACKEND
from .roc_metrics import (
    DegenerateBatchError,
    DelongEstimate,
    ScoredBatch,
    auc,
    bootstrap_variance,
    delong,
    placement_values,
    variance_upper_bound,
)
from .kalman_monitor import (
    FilterState,
    FilterStep,
    Monitor,
    MonitorRecord,
    Observation,
    confidence_interval,
    init_state,
    monitor_batches,
    run_filter,
    step,
)

__version__ = "0.1.0"
