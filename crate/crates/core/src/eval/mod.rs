//! Error metrics, baselines, ensemble diagnostics and report tables.

mod baselines;
mod diagnostics;
mod metrics;
mod report;

pub use baselines::{
    baseline_linear, historical_last, historical_last_dataset, linear_param_count, BaselineKind, NearestNeighbor,
    Neighbor,
};
pub use diagnostics::{
    correlation_error_diagram, decomposition_residual, jl_check, pearson, quantile, CorrelationDiagram,
    CorrelationErrorPoint, JlReport,
};
pub use metrics::{metrics, pooled_metrics, MetricAccumulator, MetricReport, StepMetrics, REPORT_HORIZONS};
pub use report::{
    evaluate_forecaster, evaluate_predictions, horizon_table, metrics_csv, metrics_csv_per_step, HorizonTable,
    TableRow,
};
