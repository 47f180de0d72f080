from .config import (
    BUCKETS,
    OUTPUT_ROOT_ENV,
    VARIANT_HEURISTIC,
    VARIANTS,
    ExperimentConfig,
    sample_start_goal,
)
from .plots import emit_plots, f_timeline_rows, render_overhead_svg
from .runner import (
    MetricsRow,
    bucket_of,
    collect_training_set,
    ensure_models,
    eval_suite,
    metrics_from_trace,
    run_experiment,
    write_metrics_csv,
)

__all__ = [
    "ExperimentConfig", "sample_start_goal", "VARIANTS", "VARIANT_HEURISTIC",
    "BUCKETS", "OUTPUT_ROOT_ENV",
    "MetricsRow", "run_experiment", "eval_suite", "metrics_from_trace",
    "write_metrics_csv", "ensure_models", "collect_training_set", "bucket_of",
    "emit_plots", "render_overhead_svg", "f_timeline_rows",
]
