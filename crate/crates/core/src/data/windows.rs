use std::sync::Arc;

use crate::data::RawSeries;
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Sliding-window samples over one split.
///
/// Samples are not materialized; each holds only its offset into the shared
/// source values, so datasets are cheap to clone and share across threads.
#[derive(Clone, Debug)]
pub struct WindowedDataset {
    source: Arc<Vec<f32>>,
    nodes: usize,
    features: usize,
    steps: usize,
    t_past: usize,
    t_future: usize,
    offsets: Vec<usize>,
}

/// Number of windows `floor((len − t_past − t_future)/stride) + 1`, or zero
/// when the series is too short.
pub fn window_count(len: usize, t_past: usize, t_future: usize, stride: usize) -> usize {
    let span = t_past + t_future;
    if stride == 0 || len < span {
        0
    } else {
        (len - span) / stride + 1
    }
}

/// Builds chronological windows at every `stride`-aligned offset. The past
/// window of sample `i` covers steps `[i·stride, i·stride + t_past)` and the
/// future window immediately follows it.
pub fn make_windows(series: &RawSeries, t_past: usize, t_future: usize, stride: usize) -> Result<WindowedDataset> {
    if t_past == 0 || t_future == 0 || stride == 0 {
        return Err(Error::Config(format!(
            "window lengths and stride must be positive (t_past={t_past}, t_future={t_future}, stride={stride})"
        )));
    }
    let len = series.steps();
    if len < t_past + t_future {
        return Err(Error::Empty(format!(
            "split of {len} steps is shorter than t_past + t_future = {}",
            t_past + t_future
        )));
    }
    let count = window_count(len, t_past, t_future, stride);
    Ok(WindowedDataset {
        source: Arc::new(series.values.data().to_vec()),
        nodes: series.nodes(),
        features: series.features(),
        steps: len,
        t_past,
        t_future,
        offsets: (0..count).map(|i| i * stride).collect(),
    })
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn t_past(&self) -> usize {
        self.t_past
    }

    pub fn t_future(&self) -> usize {
        self.t_future
    }

    /// Row length of a past window, `d·t_past`.
    pub fn input_len(&self) -> usize {
        self.features * self.t_past
    }

    /// Start step of sample `i` within its split.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    fn row(&self, node: usize, feature: usize) -> &[f32] {
        let start = (node * self.features + feature) * self.steps;
        &self.source[start..start + self.steps]
    }

    fn write_past<T: Scalar>(&self, offset: usize, out: &mut Vec<T>) {
        for node in 0..self.nodes {
            for f in 0..self.features {
                let row = self.row(node, f);
                out.extend(row[offset..offset + self.t_past].iter().map(|&v| T::lit(v as f64)));
            }
        }
    }

    fn write_future<T: Scalar>(&self, offset: usize, out: &mut Vec<T>) {
        let start = offset + self.t_past;
        for node in 0..self.nodes {
            let row = self.row(node, 0);
            out.extend(row[start..start + self.t_future].iter().map(|&v| T::lit(v as f64)));
        }
    }

    /// Sample `i` as `(X_past [n, d·t_past], X_future [n, t_future])`. Past
    /// rows are flattened feature-major; the target is feature 0.
    pub fn sample<T: Scalar>(&self, i: usize) -> Result<(Tensor<T>, Tensor<T>)> {
        let offset = *self
            .offsets
            .get(i)
            .ok_or_else(|| Error::dim("sample", format!("index {i} outside 0..{}", self.len())))?;
        let mut past = Vec::with_capacity(self.nodes * self.input_len());
        let mut future = Vec::with_capacity(self.nodes * self.t_future);
        self.write_past(offset, &mut past);
        self.write_future(offset, &mut future);
        Ok((
            Tensor::new(vec![self.nodes, self.input_len()], past)?,
            Tensor::new(vec![self.nodes, self.t_future], future)?,
        ))
    }

    /// Stacks the selected samples into `([B, n, d·t_past], [B, n, t_future])`.
    pub fn batch<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor<T>, Tensor<T>)> {
        let b = indices.len();
        let mut past = Vec::with_capacity(b * self.nodes * self.input_len());
        let mut future = Vec::with_capacity(b * self.nodes * self.t_future);
        for &i in indices {
            let offset = *self
                .offsets
                .get(i)
                .ok_or_else(|| Error::dim("batch", format!("index {i} outside 0..{}", self.len())))?;
            self.write_past(offset, &mut past);
            self.write_future(offset, &mut future);
        }
        Ok((
            Tensor::new(vec![b, self.nodes, self.input_len()], past)?,
            Tensor::new(vec![b, self.nodes, self.t_future], future)?,
        ))
    }

    /// All targets stacked as `[len, n, t_future]`.
    pub fn targets<T: Scalar>(&self) -> Tensor<T> {
        let mut out = Vec::with_capacity(self.len() * self.nodes * self.t_future);
        for &offset in &self.offsets {
            self.write_future(offset, &mut out);
        }
        Tensor::new(vec![self.len(), self.nodes, self.t_future], out).expect("target shape")
    }

    /// Index ranges of consecutive batches of at most `batch_size` samples.
    pub fn batch_ranges(&self, batch_size: usize) -> Vec<std::ops::Range<usize>> {
        let size = batch_size.max(1);
        (0..self.len())
            .step_by(size)
            .map(|s| s..(s + size).min(self.len()))
            .collect()
    }
}
