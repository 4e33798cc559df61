use std::fmt::Write as _;

use super::metrics::{metrics, MetricReport, StepMetrics};
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::model::Forecaster;
use crate::tensor::{Scalar, Tensor};
use crate::training::{predict_dataset, Standardizer};

/// Scores standardized forecasts `[len, n, t_future]` against a dataset's
/// targets after de-standardizing both.
pub fn evaluate_predictions<T: Scalar>(
    pred: &Tensor<T>,
    data: &WindowedDataset,
    scaler: &Standardizer,
    mask_zero: bool,
) -> Result<MetricReport> {
    let pred = scaler.inverse_forecast(pred)?;
    let target = scaler.inverse_forecast(&data.targets::<f32>())?;
    metrics(&pred, &target, mask_zero)
}

pub fn evaluate_forecaster<T: Scalar, M: Forecaster<T>>(
    model: &M,
    data: &WindowedDataset,
    scaler: &Standardizer,
    batch_size: usize,
    mask_zero: bool,
) -> Result<MetricReport> {
    let pred = predict_dataset::<T, M>(model, data, batch_size)?;
    evaluate_predictions(&pred, data, scaler, mask_zero)
}

/// One row of a horizon table.
#[derive(Clone, Debug)]
pub struct TableRow {
    pub variant: String,
    pub params: Option<usize>,
    pub report: MetricReport,
}

impl TableRow {
    pub fn new(variant: impl Into<String>, params: Option<usize>, report: MetricReport) -> Self {
        Self {
            variant: variant.into(),
            params,
            report,
        }
    }
}

/// Rows sharing one horizon layout: columns for each reported horizon and
/// the average, each with MAE, RMSE and MAPE.
#[derive(Clone, Debug)]
pub struct HorizonTable {
    pub horizons: Vec<usize>,
    pub rows: Vec<TableRow>,
}

/// Builds the table; every report must cover the same number of steps.
pub fn horizon_table(rows: Vec<TableRow>) -> Result<HorizonTable> {
    let steps = rows.first().map_or(0, |r| r.report.horizon_count());
    if rows.iter().any(|r| r.report.horizon_count() != steps) {
        return Err(Error::dim("horizon table", "reports cover different forecast lengths"));
    }
    let horizons = rows.first().map(|r| r.report.report_horizons()).unwrap_or_default();
    Ok(HorizonTable { horizons, rows })
}

fn cells(m: &StepMetrics) -> [String; 3] {
    [format!("{:.4}", m.mae), format!("{:.4}", m.rmse), format!("{:.4}", m.mape)]
}

impl HorizonTable {
    fn groups(&self, report: &MetricReport) -> Vec<StepMetrics> {
        let mut out: Vec<StepMetrics> = self
            .horizons
            .iter()
            .filter_map(|&h| report.horizon(h).copied())
            .collect();
        out.push(report.average());
        out
    }

    fn group_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.horizons.iter().map(|h| format!("Horizon {h}")).collect();
        names.push("Average".into());
        names
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Variant | Params |");
        for g in self.group_names() {
            let _ = write!(out, " {g} MAE | {g} RMSE | {g} MAPE (%) |");
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in self.group_names() {
            out.push_str("---|---|---|");
        }
        out.push('\n');
        for row in &self.rows {
            let params = row.params.map_or_else(|| "-".into(), |p| p.to_string());
            let _ = write!(out, "| {} | {} |", row.variant, params);
            for m in self.groups(&row.report) {
                for c in cells(&m) {
                    let _ = write!(out, " {c} |");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Wide CSV with one row per variant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,params");
        for g in self.group_names() {
            let g = g.to_lowercase().replace(' ', "");
            let _ = write!(out, ",{g}_mae,{g}_rmse,{g}_mape_pct");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.variant, row.params.map_or_else(String::new, |p| p.to_string()));
            for m in self.groups(&row.report) {
                let _ = write!(out, ",{},{},{}", m.mae, m.rmse, m.mape);
            }
            out.push('\n');
        }
        out
    }
}

const METRICS_HEADER: &str = "variant,horizon,mae,rmse,mape_pct\n";

/// Long-format `metrics.csv` with the reported horizons and an `avg` row per variant.
pub fn metrics_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    for row in rows {
        for h in row.report.report_horizons() {
            let m = row.report.horizon(h).expect("reported horizon exists");
            let _ = writeln!(out, "{},{},{},{},{}", row.variant, h, m.mae, m.rmse, m.mape);
        }
        let m = row.report.average();
        let _ = writeln!(out, "{},avg,{},{},{}", row.variant, m.mae, m.rmse, m.mape);
    }
    out
}

/// Long-format `metrics.csv` with every predicted step per variant.
pub fn metrics_csv_per_step(rows: &[TableRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    for row in rows {
        for (k, m) in row.report.per_step.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", row.variant, k + 1, m.mae, m.rmse, m.mape);
        }
    }
    out
}
