use std::fmt;
use std::str::FromStr;

use crate::data::{RawSeries, WindowedDataset};
use crate::error::{Error, Result};
use crate::model::{Forecaster, LinearForecaster};
use crate::tensor::{Scalar, Tensor};
use crate::training::{fit, Standardizer, TrainConfig, TrainOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    HistoricalLast,
    Linear,
    NearestNeighbor,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::HistoricalLast => "hl",
            BaselineKind::Linear => "linear",
            BaselineKind::NearestNeighbor => "1nn",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hl" => Ok(BaselineKind::HistoricalLast),
            "linear" => Ok(BaselineKind::Linear),
            "1nn" => Ok(BaselineKind::NearestNeighbor),
            other => Err(Error::Usage(format!(
                "unknown baseline '{other}', expected hl, linear or 1nn"
            ))),
        }
    }
}

/// Repeats the last observed value of feature 0 for every future step.
///
/// `x` is `[.., n, d·t_past]` with feature-major rows, as built by
/// [`crate::data::make_windows`].
pub fn historical_last<T: Scalar>(x: &Tensor<T>, t_past: usize, horizon: usize) -> Result<Tensor<T>> {
    if t_past == 0 || x.rank() < 1 || x.last_dim() < t_past {
        return Err(Error::dim(
            "historical last",
            format!("input {:?} cannot hold a past window of {t_past}", x.shape()),
        ));
    }
    let width = x.last_dim();
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("rank checked") = horizon;
    let data = x
        .data()
        .chunks(width)
        .flat_map(|row| std::iter::repeat_n(row[t_past - 1], horizon))
        .collect();
    Tensor::new(shape, data)
}

/// HL forecasts for every sample of a dataset, `[len, n, t_future]`.
pub fn historical_last_dataset(data: &WindowedDataset) -> Result<Tensor<f32>> {
    let all: Vec<usize> = (0..data.len()).collect();
    let (x, _) = data.batch::<f32>(&all)?;
    historical_last(&x, data.t_past(), data.t_future())
}

/// The shared-weight linear baseline trained with the standard loop.
pub fn baseline_linear(
    train: &WindowedDataset,
    val: &WindowedDataset,
    scaler: &Standardizer,
    config: &TrainConfig,
) -> Result<TrainOutcome<f32, LinearForecaster<f32>>> {
    let model = LinearForecaster::new(train.input_len(), train.t_future(), config.seed);
    fit(model, train, val, scaler, config)
}

/// Parameter count of the linear baseline, `L·horizon + horizon`.
pub fn linear_param_count(input_len: usize, horizon: usize) -> usize {
    LinearForecaster::<f32>::new(input_len, horizon, 0).num_params()
}

/// Z-normalizes in place; a constant window becomes all zeros.
fn z_normalize(window: &mut [f64]) {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in window.iter_mut() {
        *v = if std > 1e-12 { (*v - mean) / std } else { 0.0 };
    }
}

/// Per-node nearest neighbor over the training split (feature 0).
///
/// Each node is searched independently by brute force over every training
/// offset whose continuation is fully observed.
#[derive(Clone, Debug)]
pub struct NearestNeighbor {
    t_past: usize,
    t_future: usize,
    corpus: Vec<Vec<f32>>,
    /// Z-normalized candidate windows per node, `candidates × t_past`.
    normalized: Vec<Vec<f64>>,
}

/// Result of one nearest-neighbor query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub offset: usize,
    pub distance: f64,
}

impl NearestNeighbor {
    pub fn fit(train: &RawSeries, t_past: usize, t_future: usize) -> Result<Self> {
        if t_past == 0 || t_future == 0 {
            return Err(Error::Config("t_past and t_future must be positive".into()));
        }
        if train.steps() < t_past + t_future {
            return Err(Error::Empty(format!(
                "1NN needs at least {} training steps per node, found {}",
                t_past + t_future,
                train.steps()
            )));
        }
        let candidates = train.steps() - t_past - t_future + 1;
        let mut corpus = Vec::with_capacity(train.nodes());
        let mut normalized = Vec::with_capacity(train.nodes());
        for node in 0..train.nodes() {
            let row = train.row(node, 0);
            let mut z = Vec::with_capacity(candidates * t_past);
            for c in 0..candidates {
                let mut w: Vec<f64> = row[c..c + t_past].iter().map(|&v| v as f64).collect();
                z_normalize(&mut w);
                z.extend(w);
            }
            corpus.push(row.to_vec());
            normalized.push(z);
        }
        Ok(Self {
            t_past,
            t_future,
            corpus,
            normalized,
        })
    }

    pub fn nodes(&self) -> usize {
        self.corpus.len()
    }

    pub fn candidates(&self) -> usize {
        self.corpus.first().map_or(0, |r| r.len() - self.t_past - self.t_future + 1)
    }

    /// Closest training window to `query` for `node`; the earliest wins ties.
    pub fn nearest(&self, node: usize, query: &[f64]) -> Result<Neighbor> {
        if query.len() != self.t_past || node >= self.nodes() {
            return Err(Error::dim(
                "1nn query",
                format!("node {node}, length {} (expected < {}, {})", query.len(), self.nodes(), self.t_past),
            ));
        }
        let mut q = query.to_vec();
        z_normalize(&mut q);
        let mut best = Neighbor {
            offset: 0,
            distance: f64::INFINITY,
        };
        for (c, cand) in self.normalized[node].chunks(self.t_past).enumerate() {
            let d2: f64 = cand.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best.distance {
                best = Neighbor { offset: c, distance: d2 };
            }
        }
        best.distance = best.distance.sqrt();
        Ok(best)
    }

    /// The training values that followed the nearest window.
    pub fn continuation(&self, node: usize, neighbor: Neighbor) -> &[f32] {
        let start = neighbor.offset + self.t_past;
        &self.corpus[node][start..start + self.t_future]
    }

    /// Forecasts `[.., n, d·t_past] → [.., n, t_future]` from feature 0.
    pub fn predict<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.nodes();
        if x.rank() < 2 || x.shape()[x.rank() - 2] != n || x.last_dim() < self.t_past {
            return Err(Error::dim(
                "1nn",
                format!("expected [.., {n}, ≥{}], got {:?}", self.t_past, x.shape()),
            ));
        }
        let width = x.last_dim();
        let mut out = Vec::with_capacity(x.rows() * self.t_future);
        for (r, row) in x.data().chunks(width).enumerate() {
            let node = r % n;
            let query: Vec<f64> = row[..self.t_past].iter().map(|v| v.as_f64()).collect();
            let nb = self.nearest(node, &query)?;
            out.extend(self.continuation(node, nb).iter().map(|&v| T::lit(v as f64)));
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().expect("rank checked") = self.t_future;
        Tensor::new(shape, out)
    }

    pub fn predict_dataset(&self, data: &WindowedDataset) -> Result<Tensor<f32>> {
        let all: Vec<usize> = (0..data.len()).collect();
        let (x, _) = data.batch::<f32>(&all)?;
        self.predict(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hl_repeats_last_value() {
        let x = Tensor::new(vec![2, 3], vec![1.0f64, 2.0, 5.0, 7.0, 7.0, 7.0]).unwrap();
        let y = historical_last(&x, 3, 4).unwrap();
        assert_eq!(y.shape(), &[2, 4]);
        assert_eq!(y.data(), &[5.0, 5.0, 5.0, 5.0, 7.0, 7.0, 7.0, 7.0]);
    }

    #[test]
    fn hl_uses_feature_zero_only() {
        // t_past = 2, two features: feature 0 = [1, 2], feature 1 = [9, 9]
        let x = Tensor::new(vec![1, 4], vec![1.0f32, 2.0, 9.0, 9.0]).unwrap();
        assert_eq!(historical_last(&x, 2, 2).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn exact_match_returns_its_continuation() {
        let row: Vec<f32> = (0..40).map(|i| ((i * 7) % 11) as f32 + (i as f32) * 0.01).collect();
        let train = RawSeries::from_node_rows(std::slice::from_ref(&row), 5, 0).unwrap();
        let nn = NearestNeighbor::fit(&train, 4, 3).unwrap();
        let query: Vec<f64> = row[20..24].iter().map(|&v| v as f64).collect();
        let nb = nn.nearest(0, &query).unwrap();
        assert_eq!(nb.offset, 20);
        assert!(nb.distance < 1e-6);
        assert_eq!(nn.continuation(0, nb), &row[24..27]);
    }

    #[test]
    fn constant_training_gives_constant_forecast() {
        let train = RawSeries::from_node_rows(&[vec![3.0; 30]], 5, 0).unwrap();
        let nn = NearestNeighbor::fit(&train, 5, 4).unwrap();
        let x = Tensor::new(vec![1, 5], vec![1.0f32, 4.0, 2.0, 8.0, 5.0]).unwrap();
        assert_eq!(nn.predict(&x).unwrap().data(), &[3.0; 4]);
    }

    #[test]
    fn insufficient_history() {
        let train = RawSeries::from_node_rows(&[vec![1.0; 5]], 5, 0).unwrap();
        assert!(NearestNeighbor::fit(&train, 4, 3).is_err());
    }

    #[test]
    fn baseline_names() {
        for kind in [BaselineKind::HistoricalLast, BaselineKind::Linear, BaselineKind::NearestNeighbor] {
            assert_eq!(kind.to_string().parse::<BaselineKind>().unwrap(), kind);
        }
        assert!("arima".parse::<BaselineKind>().is_err());
        assert_eq!(linear_param_count(12, 12), 156);
    }
}
