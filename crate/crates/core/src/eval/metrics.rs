use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Horizons (1-indexed steps) reported alongside the average.
pub const REPORT_HORIZONS: [usize; 3] = [3, 6, 12];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
}

/// Per-step error metrics over a set of forecasts.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    /// Entry `k` is predicted step `k + 1`.
    pub per_step: Vec<StepMetrics>,
    pub samples: usize,
    pub mask_zero: bool,
}

impl MetricReport {
    pub fn horizon_count(&self) -> usize {
        self.per_step.len()
    }

    /// Metrics at 1-indexed step `h`.
    pub fn horizon(&self, h: usize) -> Option<&StepMetrics> {
        h.checked_sub(1).and_then(|k| self.per_step.get(k))
    }

    /// Mean of the per-step values.
    pub fn average(&self) -> StepMetrics {
        let k = self.per_step.len().max(1) as f64;
        let sum = |f: fn(&StepMetrics) -> f64| self.per_step.iter().map(f).sum::<f64>() / k;
        StepMetrics {
            mae: sum(|m| m.mae),
            rmse: sum(|m| m.rmse),
            mape: sum(|m| m.mape),
        }
    }

    /// The reported horizons that exist for this forecast length.
    pub fn report_horizons(&self) -> Vec<usize> {
        REPORT_HORIZONS
            .iter()
            .copied()
            .filter(|&h| h <= self.per_step.len())
            .collect()
    }
}

/// Streaming per-step sums for [`MetricReport`].
#[derive(Clone, Debug)]
pub struct MetricAccumulator {
    horizon: usize,
    mask_zero: bool,
    abs: Vec<f64>,
    sq: Vec<f64>,
    ape: Vec<f64>,
    counts: Vec<usize>,
    ape_counts: Vec<usize>,
    samples: usize,
}

impl MetricAccumulator {
    pub fn new(horizon: usize, mask_zero: bool) -> Self {
        Self {
            horizon,
            mask_zero,
            abs: vec![0.0; horizon],
            sq: vec![0.0; horizon],
            ape: vec![0.0; horizon],
            counts: vec![0; horizon],
            ape_counts: vec![0; horizon],
            samples: 0,
        }
    }

    /// Adds forecasts `[B, n, horizon]` (or `[n, horizon]`).
    pub fn add<T: Scalar, U: Scalar>(&mut self, pred: &Tensor<T>, target: &Tensor<U>) -> Result<()> {
        if pred.shape() != target.shape() {
            return Err(Error::dim(
                "metrics",
                format!("prediction {:?} vs target {:?}", pred.shape(), target.shape()),
            ));
        }
        if pred.rank() == 0 || pred.last_dim() != self.horizon {
            return Err(Error::dim(
                "metrics",
                format!("expected trailing horizon {}, got {:?}", self.horizon, pred.shape()),
            ));
        }
        self.samples += match pred.rank() {
            1 | 2 => 1,
            _ => pred.shape()[0],
        };
        for (i, (&p, &y)) in pred.data().iter().zip(target.data()).enumerate() {
            let k = i % self.horizon;
            let (p, y) = (p.as_f64(), y.as_f64());
            let e = (p - y).abs();
            self.abs[k] += e;
            self.sq[k] += e * e;
            self.counts[k] += 1;
            if !(self.mask_zero && y == 0.0) {
                self.ape[k] += e / y.abs();
                self.ape_counts[k] += 1;
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<MetricReport> {
        let mut per_step = Vec::with_capacity(self.horizon);
        for k in 0..self.horizon {
            if self.counts[k] == 0 {
                return Err(Error::Empty("no forecasts to score".into()));
            }
            if self.ape_counts[k] == 0 {
                return Err(Error::UndefinedMetric(format!(
                    "MAPE at step {} has every target masked",
                    k + 1
                )));
            }
            let n = self.counts[k] as f64;
            per_step.push(StepMetrics {
                mae: self.abs[k] / n,
                rmse: (self.sq[k] / n).sqrt(),
                mape: 100.0 * self.ape[k] / self.ape_counts[k] as f64,
            });
        }
        let report = MetricReport {
            per_step,
            samples: self.samples,
            mask_zero: self.mask_zero,
        };
        let finite = report
            .per_step
            .iter()
            .all(|m| m.mae.is_finite() && m.rmse.is_finite() && m.mape.is_finite());
        if !finite {
            return Err(Error::UndefinedMetric(
                "non-finite metric (a zero target with masking disabled?)".into(),
            ));
        }
        Ok(report)
    }
}

/// Per-step metrics of forecasts `[B, n, horizon]`. With `mask_zero`,
/// zero targets are left out of MAPE only.
pub fn metrics<T: Scalar, U: Scalar>(pred: &Tensor<T>, target: &Tensor<U>, mask_zero: bool) -> Result<MetricReport> {
    let mut acc = MetricAccumulator::new(pred.last_dim(), mask_zero);
    acc.add(pred, target)?;
    acc.finish()
}

/// MAE, RMSE and MAPE over all entries at once, ignoring step structure.
pub fn pooled_metrics<T: Scalar, U: Scalar>(pred: &Tensor<T>, target: &Tensor<U>, mask_zero: bool) -> Result<StepMetrics> {
    let flat_p = Tensor::new(vec![pred.len(), 1], pred.data().to_vec())?;
    let flat_y = Tensor::new(vec![target.len(), 1], target.data().to_vec())?;
    if pred.shape() != target.shape() {
        return Err(Error::dim(
            "metrics",
            format!("prediction {:?} vs target {:?}", pred.shape(), target.shape()),
        ));
    }
    Ok(metrics(&flat_p, &flat_y, mask_zero)?.per_step[0])
}
