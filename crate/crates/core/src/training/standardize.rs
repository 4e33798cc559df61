use crate::data::RawSeries;
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

const STD_FLOOR: f64 = 1e-8;

/// Per node-feature z-scoring with statistics from the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    nodes: usize,
    features: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &RawSeries) -> Result<Self> {
        let (n, d, t) = (train.nodes(), train.features(), train.steps());
        if t == 0 {
            return Err(Error::Empty("cannot standardize a zero-length series".into()));
        }
        let mut mean = Vec::with_capacity(n * d);
        let mut std = Vec::with_capacity(n * d);
        for node in 0..n {
            for f in 0..d {
                let row = train.row(node, f);
                let mu = row.iter().map(|&v| v as f64).sum::<f64>() / t as f64;
                let var = row.iter().map(|&v| (v as f64 - mu).powi(2)).sum::<f64>() / t as f64;
                mean.push(mu);
                std.push(var.sqrt().max(STD_FLOOR));
            }
        }
        Ok(Self {
            nodes: n,
            features: d,
            mean,
            std,
        })
    }

    /// Pass-through scaling for runs with standardization disabled.
    pub fn identity(nodes: usize, features: usize) -> Self {
        Self {
            nodes,
            features,
            mean: vec![0.0; nodes * features],
            std: vec![1.0; nodes * features],
        }
    }

    pub fn from_parts(nodes: usize, features: usize, mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != nodes * features || std.len() != nodes * features {
            return Err(Error::dim("standardizer", "statistics do not match nodes × features"));
        }
        if std.iter().any(|&s| !(s.is_finite() && s > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("standardizer statistics must be finite with positive std".into()));
        }
        Ok(Self {
            nodes,
            features,
            mean,
            std,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    fn check(&self, series: &RawSeries) -> Result<()> {
        if series.nodes() != self.nodes || series.features() != self.features {
            return Err(Error::dim(
                "standardizer",
                format!(
                    "fitted on {}×{} but series is {}×{}",
                    self.nodes,
                    self.features,
                    series.nodes(),
                    series.features()
                ),
            ));
        }
        Ok(())
    }

    fn apply(&self, series: &RawSeries, f: impl Fn(f64, f64, f64) -> f64) -> Result<RawSeries> {
        self.check(series)?;
        let t = series.steps();
        let mut out = series.clone();
        for (k, chunk) in out.values.data_mut().chunks_mut(t.max(1)).enumerate().take(self.nodes * self.features) {
            let (mu, sd) = (self.mean[k], self.std[k]);
            for v in chunk {
                *v = f(*v as f64, mu, sd) as f32;
            }
        }
        Ok(out)
    }

    pub fn transform(&self, series: &RawSeries) -> Result<RawSeries> {
        self.apply(series, |v, mu, sd| (v - mu) / sd)
    }

    pub fn inverse_transform(&self, series: &RawSeries) -> Result<RawSeries> {
        self.apply(series, |v, mu, sd| v * sd + mu)
    }

    /// De-standardizes forecasts `[.., n, horizon]` of feature 0 into `f64`.
    pub fn inverse_forecast<T: Scalar>(&self, y: &Tensor<T>) -> Result<Tensor<f64>> {
        if y.rank() < 2 || y.shape()[y.rank() - 2] != self.nodes {
            return Err(Error::dim(
                "inverse forecast",
                format!("expected [.., {}, horizon], got {:?}", self.nodes, y.shape()),
            ));
        }
        let h = y.last_dim().max(1);
        let data = y
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let k = ((i / h) % self.nodes) * self.features;
                v.as_f64() * self.std[k] + self.mean[k]
            })
            .collect();
        Tensor::new(y.shape().to_vec(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rows: &[Vec<f32>]) -> RawSeries {
        RawSeries::from_node_rows(rows, 5, 0).unwrap()
    }

    #[test]
    fn constant_series() {
        let s = series(&[vec![7.0; 10]]);
        let z = Standardizer::fit(&s).unwrap();
        let t = z.transform(&s).unwrap();
        assert!(t.values.data().iter().all(|&v| v == 0.0));
        assert_eq!(z.inverse_transform(&t).unwrap(), s);
    }

    #[test]
    fn roundtrip_and_centering() {
        let s = series(&[
            (0..50).map(|i| (i as f32 * 0.37).sin() * 40.0 + 100.0).collect(),
            (0..50).map(|i| (i * i % 17) as f32).collect(),
        ]);
        let z = Standardizer::fit(&s).unwrap();
        let t = z.transform(&s).unwrap();
        for node in 0..2 {
            let mean: f64 = t.row(node, 0).iter().map(|&v| v as f64).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-5);
        }
        let back = z.inverse_transform(&t).unwrap();
        let diff = back.values.max_abs_diff(&s.values).unwrap();
        assert!(diff < 1e-5 * 140.0, "{diff}");
    }

    #[test]
    fn inverse_forecast_uses_node_statistics() {
        let z = Standardizer::from_parts(2, 1, vec![10.0, -5.0], vec![2.0, 0.5]).unwrap();
        let y = Tensor::new(vec![1, 2, 2], vec![1.0f32, 0.0, -2.0, 4.0]).unwrap();
        assert_eq!(z.inverse_forecast(&y).unwrap().data(), &[12.0, 10.0, -6.0, -3.0]);
        assert!(z.inverse_forecast(&Tensor::<f32>::zeros(&[3, 2])).is_err());
    }

    #[test]
    fn statistics_ignore_other_splits() {
        let train = series(&[vec![1.0, 2.0, 3.0]]);
        let z = Standardizer::fit(&train).unwrap();
        let mut val = series(&[vec![100.0, 200.0]]);
        let _ = z.transform(&val).unwrap();
        val.values.data_mut()[0] = -1e6;
        assert_eq!(Standardizer::fit(&train).unwrap(), z);
    }
}
