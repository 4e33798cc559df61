use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Multivariate series of `n` nodes × `d` features × `t` steps.
///
/// The optional adjacency matrix is carried along for completeness; nothing in
/// the model reads it.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    pub values: Tensor<f32>,
    pub interval_minutes: u32,
    /// Seconds since the Unix epoch of the first step.
    pub start_timestamp: i64,
    pub adjacency: Option<Tensor<f32>>,
}

impl RawSeries {
    pub fn new(values: Tensor<f32>, interval_minutes: u32, start_timestamp: i64) -> Result<Self> {
        if values.rank() != 3 {
            return Err(Error::dim(
                "series",
                format!("expected [nodes, features, steps], got {:?}", values.shape()),
            ));
        }
        if interval_minutes == 0 {
            return Err(Error::Config("interval_minutes must be positive".into()));
        }
        values.ensure_finite("series values")?;
        Ok(Self {
            values,
            interval_minutes,
            start_timestamp,
            adjacency: None,
        })
    }

    /// Single-feature series from per-node rows.
    pub fn from_node_rows(rows: &[Vec<f32>], interval_minutes: u32, start_timestamp: i64) -> Result<Self> {
        let t = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::dim("series", "node rows have different lengths"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(Tensor::new(vec![rows.len(), 1, t], data)?, interval_minutes, start_timestamp)
    }

    pub fn nodes(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn features(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn steps(&self) -> usize {
        self.values.shape()[2]
    }

    pub fn value(&self, node: usize, feature: usize, step: usize) -> f32 {
        let (d, t) = (self.features(), self.steps());
        self.values.data()[(node * d + feature) * t + step]
    }

    /// Contiguous time row for one node and feature.
    pub fn row(&self, node: usize, feature: usize) -> &[f32] {
        let (d, t) = (self.features(), self.steps());
        let start = (node * d + feature) * t;
        &self.values.data()[start..start + t]
    }

    /// Steps `[start, end)` as a new series with a shifted start timestamp.
    pub fn slice_steps(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.steps() {
            return Err(Error::dim(
                "slice",
                format!("range {start}..{end} outside 0..{}", self.steps()),
            ));
        }
        let (n, d) = (self.nodes(), self.features());
        let len = end - start;
        let mut data = Vec::with_capacity(n * d * len);
        for node in 0..n {
            for f in 0..d {
                data.extend_from_slice(&self.row(node, f)[start..end]);
            }
        }
        Ok(Self {
            values: Tensor::new(vec![n, d, len], data)?,
            interval_minutes: self.interval_minutes,
            start_timestamp: self.start_timestamp + start as i64 * self.interval_minutes as i64 * 60,
            adjacency: self.adjacency.clone(),
        })
    }

    /// Concatenates series along time (inverse of splitting).
    pub fn concat(parts: &[&RawSeries]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Empty("nothing to concatenate".into()))?;
        let (n, d) = (first.nodes(), first.features());
        if parts.iter().any(|p| p.nodes() != n || p.features() != d) {
            return Err(Error::dim("concat", "node or feature counts differ"));
        }
        let total: usize = parts.iter().map(|p| p.steps()).sum();
        let mut data = Vec::with_capacity(n * d * total);
        for node in 0..n {
            for f in 0..d {
                for p in parts {
                    data.extend_from_slice(p.row(node, f));
                }
            }
        }
        Ok(Self {
            values: Tensor::new(vec![n, d, total], data)?,
            interval_minutes: first.interval_minutes,
            start_timestamp: first.start_timestamp,
            adjacency: first.adjacency.clone(),
        })
    }
}

/// Non-overlapping window means along time; a trailing partial window is dropped.
pub fn aggregate(raw: &RawSeries, target_minutes: u32) -> Result<RawSeries> {
    if target_minutes == 0 || !target_minutes.is_multiple_of(raw.interval_minutes) {
        return Err(Error::Config(format!(
            "cannot aggregate {}-minute data into {}-minute windows",
            raw.interval_minutes, target_minutes
        )));
    }
    let factor = (target_minutes / raw.interval_minutes) as usize;
    if factor == 1 {
        return Ok(raw.clone());
    }
    let (n, d) = (raw.nodes(), raw.features());
    let out_len = raw.steps() / factor;
    let mut data = Vec::with_capacity(n * d * out_len);
    for node in 0..n {
        for f in 0..d {
            let row = raw.row(node, f);
            for w in 0..out_len {
                let sum: f64 = row[w * factor..(w + 1) * factor].iter().map(|&v| v as f64).sum();
                data.push((sum / factor as f64) as f32);
            }
        }
    }
    Ok(RawSeries {
        values: Tensor::new(vec![n, d, out_len], data)?,
        interval_minutes: target_minutes,
        start_timestamp: raw.start_timestamp,
        adjacency: raw.adjacency.clone(),
    })
}

/// Contiguous train/validation/test partitions in time order. Boundaries sit
/// at `floor(cumulative_fraction · t)`.
pub fn chronological_split(raw: &RawSeries, ratios: [u32; 3]) -> Result<(RawSeries, RawSeries, RawSeries)> {
    if ratios.contains(&0) {
        return Err(Error::Config(format!("split ratios must be positive, got {ratios:?}")));
    }
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    let t = raw.steps() as u64;
    let first = (t * ratios[0] as u64 / total) as usize;
    let second = (t * (ratios[0] + ratios[1]) as u64 / total) as usize;
    let bounds = [0, first, second, raw.steps()];
    for (name, w) in ["train", "validation", "test"].iter().zip(bounds.windows(2)) {
        if w[1] <= w[0] {
            return Err(Error::Empty(format!(
                "{name} split is empty ({} steps, ratios {ratios:?})",
                raw.steps()
            )));
        }
    }
    Ok((
        raw.slice_steps(0, first)?,
        raw.slice_steps(first, second)?,
        raw.slice_steps(second, raw.steps())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f32]) -> RawSeries {
        RawSeries::from_node_rows(&[values.to_vec()], 5, 0).unwrap()
    }

    #[test]
    fn aggregate_window_means() {
        let s = series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let a = aggregate(&s, 15).unwrap();
        assert_eq!(a.row(0, 0), &[2.0, 5.0]);
        assert_eq!(a.interval_minutes, 15);
        assert_eq!(aggregate(&s, 5).unwrap(), s);
        assert!(aggregate(&s, 12).is_err());
    }

    #[test]
    fn one_day_of_five_minute_data_gives_96_windows() {
        let s = series(&vec![1.0; 288]);
        assert_eq!(aggregate(&s, 15).unwrap().steps(), 96);
    }

    #[test]
    fn aggregation_preserves_the_mean() {
        let vals: Vec<f32> = (0..300).map(|i| ((i * 37) % 101) as f32 * 0.5).collect();
        let s = series(&vals);
        let a = aggregate(&s, 15).unwrap();
        let covered: f64 = vals.iter().map(|&v| v as f64).sum::<f64>() / 300.0;
        let agg: f64 = a.row(0, 0).iter().map(|&v| v as f64).sum::<f64>() / 100.0;
        assert!((covered - agg).abs() < 1e-5);
    }

    #[test]
    fn split_lengths() {
        let s = series(&[0.0; 10]);
        let (a, b, c) = chronological_split(&s, [6, 2, 2]).unwrap();
        assert_eq!((a.steps(), b.steps(), c.steps()), (6, 2, 2));
        assert_eq!(b.start_timestamp, 6 * 5 * 60);

        let big = series(&vec![0.0; 35_040]);
        let (a, b, c) = chronological_split(&big, [6, 2, 2]).unwrap();
        assert_eq!((a.steps(), b.steps(), c.steps()), (21_024, 7_008, 7_008));
    }

    #[test]
    fn split_concatenates_back() {
        let vals: Vec<f32> = (0..23).map(|i| i as f32).collect();
        let s = RawSeries::from_node_rows(&[vals.clone(), vals.iter().map(|v| -v).collect()], 5, 100).unwrap();
        let (a, b, c) = chronological_split(&s, [6, 2, 2]).unwrap();
        assert_eq!(RawSeries::concat(&[&a, &b, &c]).unwrap(), s);
    }

    #[test]
    fn split_rejects_empty_parts() {
        assert!(chronological_split(&series(&[1.0, 2.0]), [6, 2, 2]).is_err());
        assert!(chronological_split(&series(&[1.0; 10]), [6, 0, 2]).is_err());
    }
}
