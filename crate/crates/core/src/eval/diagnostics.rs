use std::fmt::Write as _;

use super::metrics::{MetricAccumulator, MetricReport};
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::layers::RandomProjectionLayer;
use crate::model::RpMixer;
use crate::tensor::{SeededRng, Tensor};
use crate::training::Standardizer;

/// One pair of base learners in the correlation-error diagram. Blocks are
/// numbered from 1 to match the decomposition `Y = Y0 + Y1 + … + Yk`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationErrorPoint {
    pub i: usize,
    pub j: usize,
    /// `None` when either contribution has zero variance.
    pub pearson: Option<f64>,
    pub mae_pair: f64,
    pub rmse_pair: f64,
    pub mape_pair: f64,
}

#[derive(Clone, Debug)]
pub struct CorrelationDiagram {
    pub points: Vec<CorrelationErrorPoint>,
    /// Metrics of each base learner `Y0 + Yi`, de-standardized.
    pub learners: Vec<MetricReport>,
    /// Largest `max|Y − ΣY_k| / max|Y|` seen over the batches.
    pub max_relative_residual: f64,
}

impl CorrelationDiagram {
    /// Spread of the learners' average MAE (max − min).
    pub fn mae_range(&self) -> f64 {
        let maes: Vec<f64> = self.learners.iter().map(|r| r.average().mae).collect();
        let max = maes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = maes.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Columns `i,j,pearson,mae_pair,rmse_pair,mape_pair`; an undefined
    /// correlation is written as `undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,pearson,mae_pair,rmse_pair,mape_pair\n");
        for p in &self.points {
            let r = p.pearson.map_or_else(|| "undefined".to_string(), |r| r.to_string());
            let _ = writeln!(out, "{},{},{},{},{},{}", p.i, p.j, r, p.mae_pair, p.rmse_pair, p.mape_pair);
        }
        out
    }
}

/// Running sums for all pairwise Pearson coefficients, shifted by the first
/// observation of each series to limit cancellation.
struct PairwisePearson {
    k: usize,
    count: f64,
    shift: Option<Vec<f64>>,
    sum: Vec<f64>,
    cross: Vec<f64>,
}

impl PairwisePearson {
    fn new(k: usize) -> Self {
        Self {
            k,
            count: 0.0,
            shift: None,
            sum: vec![0.0; k],
            cross: vec![0.0; k * k],
        }
    }

    fn add(&mut self, values: &[f64]) {
        let shift = self.shift.get_or_insert_with(|| values.to_vec());
        let centered: Vec<f64> = values.iter().zip(shift.iter()).map(|(v, s)| v - s).collect();
        self.count += 1.0;
        for a in 0..self.k {
            self.sum[a] += centered[a];
            for b in a..self.k {
                self.cross[a * self.k + b] += centered[a] * centered[b];
            }
        }
    }

    fn pearson(&self, a: usize, b: usize) -> Option<f64> {
        let (a, b) = (a.min(b), a.max(b));
        let n = self.count;
        if n < 2.0 {
            return None;
        }
        let cov = |x: usize, y: usize| self.cross[x * self.k + y] / n - (self.sum[x] / n) * (self.sum[y] / n);
        let (va, vb) = (cov(a, a), cov(b, b));
        if va <= 0.0 || vb <= 0.0 {
            return None;
        }
        Some((cov(a, b) / (va * vb).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Pearson coefficient of two equal-length series, `None` if either is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mut acc = PairwisePearson::new(2);
    for (&a, &b) in x.iter().zip(y) {
        acc.add(&[a, b]);
    }
    acc.pearson(0, 1)
}

/// Correlation-error diagram of a pre-activation model over `data`.
///
/// Base learner `i` predicts `Y0 + W_D·H_i` (de-standardized). Pairs are
/// correlated on their raw-scale contributions `W_D·H_i` only, and the error
/// coordinate of a pair is the mean of its two learners' average errors.
pub fn correlation_error_diagram(
    model: &RpMixer<f32>,
    data: &WindowedDataset,
    scaler: &Standardizer,
    batch_size: usize,
    mask_zero: bool,
) -> Result<CorrelationDiagram> {
    let k = model.blocks.len();
    if k < 2 {
        return Err(Error::Config(format!(
            "a correlation-error diagram needs at least 2 blocks, model has {k}"
        )));
    }
    if data.is_empty() {
        return Err(Error::Empty("evaluation set has no windows".into()));
    }
    let horizon = data.t_future();
    let n = data.nodes();
    let scale: Vec<f64> = (0..n).map(|node| scaler.std()[node * data.features()]).collect();
    let mut corr = PairwisePearson::new(k);
    let mut errors: Vec<MetricAccumulator> = (0..k).map(|_| MetricAccumulator::new(horizon, mask_zero)).collect();
    let mut residual = 0.0f64;
    let mut values = vec![0.0; k];

    for range in data.batch_ranges(batch_size) {
        let indices: Vec<usize> = range.collect();
        let (x, y) = data.batch::<f32>(&indices)?;
        let dec = model.path_decompose(&x)?;
        residual = residual.max(dec.relative_residual()?);
        let target = scaler.inverse_forecast(&y)?;
        for (i, c) in dec.contributions.iter().enumerate() {
            let learner = dec.base.add(c)?;
            errors[i].add(&scaler.inverse_forecast(&learner)?, &target)?;
        }
        let len = dec.base.len();
        for e in 0..len {
            let s = scale[(e / horizon) % n];
            for (i, c) in dec.contributions.iter().enumerate() {
                values[i] = c.data()[e] as f64 * s;
            }
            corr.add(&values);
        }
    }

    let learners = errors.iter().map(MetricAccumulator::finish).collect::<Result<Vec<_>>>()?;
    let averages: Vec<_> = learners.iter().map(MetricReport::average).collect();
    let mut points = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            points.push(CorrelationErrorPoint {
                i: i + 1,
                j: j + 1,
                pearson: corr.pearson(i, j),
                mae_pair: (averages[i].mae + averages[j].mae) / 2.0,
                rmse_pair: (averages[i].rmse + averages[j].rmse) / 2.0,
                mape_pair: (averages[i].mape + averages[j].mape) / 2.0,
            });
        }
    }
    Ok(CorrelationDiagram {
        points,
        learners,
        max_relative_residual: residual,
    })
}

/// Largest relative decomposition residual of a pre-activation model over `data`.
pub fn decomposition_residual(model: &RpMixer<f32>, data: &WindowedDataset, batch_size: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for range in data.batch_ranges(batch_size) {
        let indices: Vec<usize> = range.collect();
        let (x, _) = data.batch::<f32>(&indices)?;
        worst = worst.max(model.path_decompose(&x)?.relative_residual()?);
    }
    Ok(worst)
}

/// Distance preservation of an unscaled Gaussian projection `R^n → R^n_rand`.
#[derive(Clone, Debug)]
pub struct JlReport {
    pub n: usize,
    pub n_rand: usize,
    pub num_vectors: usize,
    /// `‖Px − Py‖ / (√n_rand·‖x − y‖)` for every pair, in pair order.
    pub distortions: Vec<f64>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub warning: Option<String>,
}

impl JlReport {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Columns `pair_id,distortion`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_id,distortion\n");
        for (i, d) in self.distortions.iter().enumerate() {
            let _ = writeln!(out, "{i},{d}");
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Samples `num_vectors` standard-normal vectors in `R^n`, projects them with
/// the same layer type the model uses (seeded with `seed`), and measures the
/// rescaled distortion of every pairwise distance. Vectors come from
/// `seed + 1`.
pub fn jl_check(n: usize, n_rand: usize, num_vectors: usize, seed: u64) -> Result<JlReport> {
    if num_vectors < 2 {
        return Err(Error::Config(format!("jl_check needs at least 2 vectors, got {num_vectors}")));
    }
    if n == 0 || n_rand == 0 {
        return Err(Error::Config("jl_check dimensions must be positive".into()));
    }
    let warning = (n_rand > n).then(|| format!("n_rand = {n_rand} exceeds n = {n}; the projection does not reduce dimension"));
    let layer = RandomProjectionLayer::<f64>::new(n, n_rand, seed);
    let x: Tensor<f64> = SeededRng::new(seed.wrapping_add(1)).randn(&[num_vectors, n]);
    let px = layer.forward(&x)?;
    let dist = |t: &Tensor<f64>, dim: usize, a: usize, b: usize| {
        let (ra, rb) = (&t.data()[a * dim..(a + 1) * dim], &t.data()[b * dim..(b + 1) * dim]);
        ra.iter().zip(rb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    };
    let root = (n_rand as f64).sqrt();
    let mut distortions = Vec::with_capacity(num_vectors * (num_vectors - 1) / 2);
    for a in 0..num_vectors {
        for b in a + 1..num_vectors {
            let original = dist(&x, n, a, b);
            let projected = dist(&px, n_rand, a, b);
            distortions.push(if original > 0.0 { projected / (root * original) } else { 1.0 });
        }
    }
    let mut sorted = distortions.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(JlReport {
        n,
        n_rand,
        num_vectors,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        distortions,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 4.0, 8.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -3.0 * v + 1.0).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&x, &[2.0; 4]), None);
        let y = [0.5, -1.0, 3.0, 2.0];
        assert_eq!(pearson(&x, &y), pearson(&y, &x));
    }

    #[test]
    fn pearson_matches_two_pass_formula() {
        let x: Vec<f64> = (0..200).map(|i| 1e4 + (i as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = (0..200).map(|i| 1e4 + (i as f64 * 0.3 + 0.5).sin() + 0.01 * i as f64).collect();
        let mx = x.iter().sum::<f64>() / 200.0;
        let my = y.iter().sum::<f64>() / 200.0;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let oracle = sxy / (sxx * syy).sqrt();
        assert!((pearson(&x, &y).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn jl_identical_vectors_project_to_zero_distance() {
        let layer = RandomProjectionLayer::<f64>::new(16, 4, 9);
        let row: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let x = Tensor::new(vec![2, 16], [row.clone(), row].concat()).unwrap();
        let p = layer.forward(&x).unwrap();
        assert_eq!(&p.data()[..4], &p.data()[4..]);
    }

    #[test]
    fn jl_report_shape_and_errors() {
        let r = jl_check(32, 8, 10, 0).unwrap();
        assert_eq!(r.distortions.len(), 45);
        assert!(r.min <= r.q1 && r.q1 <= r.median && r.median <= r.q3 && r.q3 <= r.max);
        assert!(r.warning.is_none());
        assert!(jl_check(8, 16, 5, 0).unwrap().warning.is_some());
        assert!(jl_check(8, 4, 1, 0).is_err());
        assert_eq!(r.to_csv().lines().count(), 46);
    }
}
