use super::block::{ActivationOrder, BlockCache, MixerBlock, Projection, Temporal};
use super::config::{AblationFlags, ModelConfig, INIT_SEED_OFFSET};
use crate::error::{Error, Result};
use crate::layers::{ComplexLinearLayer, LinearLayer, RandomProjectionLayer};
use crate::tensor::{matmul_nt_acc, Scalar, SeededRng, Tensor};

/// A model trainable by [`crate::training::fit`].
///
/// Inputs are `[B, n, L]` (or a single `[n, L]` sample) and outputs are
/// `[B, n, horizon]`.
pub trait Forecaster<T: Scalar>: Clone {
    type Cache;

    fn nodes(&self) -> Option<usize>;
    fn input_len(&self) -> usize;
    fn horizon(&self) -> usize;

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Self::Cache)>;

    fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, cache: Self::Cache, grad_output: &Tensor<T>) -> Result<Tensor<T>>;

    fn zero_grad(&mut self);

    /// Visits every trainable parameter with its gradient, in a fixed order.
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>));

    fn num_params(&self) -> usize;
}

/// Ties a forward cache to the parameters it was computed with.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    generation: u64,
    input_shape: Vec<usize>,
    blocks: Vec<BlockCache<T>>,
    last_hidden: Tensor<T>,
}

/// Output of [`RpMixer::path_decompose`].
#[derive(Clone, Debug)]
pub struct PathDecomposition<T> {
    /// `D(X)`, the only term carrying the output bias.
    pub base: Tensor<T>,
    /// `W_D·H_i` for each block, no bias.
    pub contributions: Vec<Tensor<T>>,
    /// The regular forward output.
    pub output: Tensor<T>,
}

impl<T: Scalar> PathDecomposition<T> {
    /// `Y0 + Σ contributions`.
    pub fn recombine(&self) -> Result<Tensor<T>> {
        let mut sum = self.base.clone();
        for c in &self.contributions {
            sum.add_assign(c)?;
        }
        Ok(sum)
    }

    /// `max|Y − (Y0 + Σ W_D·H_i)| / max|Y|`.
    pub fn relative_residual(&self) -> Result<f64> {
        let diff = self.recombine()?.max_abs_diff(&self.output)?.as_f64();
        let scale = self.output.max_abs().as_f64().max(f64::MIN_POSITIVE);
        Ok(diff / scale)
    }
}

/// The full network: `n_block` mixer blocks followed by the output layer `D`
/// mapping each node's `d·t_past` row to `t_future` values.
#[derive(Clone, Debug)]
pub struct RpMixer<T: Scalar> {
    config: ModelConfig,
    pub blocks: Vec<MixerBlock<T>>,
    pub output: LinearLayer<T>,
    generation: u64,
}

/// Builds the model described by `config`, including its ablation flags.
pub fn build_model<T: Scalar>(config: &ModelConfig) -> Result<RpMixer<T>> {
    RpMixer::new(config.clone())
}

/// Builds `config` with `flags` substituted for its own ablation flags.
pub fn build_ablation<T: Scalar>(config: &ModelConfig, flags: AblationFlags) -> Result<RpMixer<T>> {
    let mut config = config.clone();
    config.flags = flags;
    RpMixer::new(config)
}

impl<T: Scalar> RpMixer<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let n = config.nodes;
        let len = config.input_len();
        let n_rand = config.n_rand();
        let activation = if config.flags.pre_activation {
            ActivationOrder::Pre
        } else {
            ActivationOrder::Post
        };
        let mut rng = SeededRng::new(config.seed.wrapping_add(INIT_SEED_OFFSET));
        let mut blocks = Vec::with_capacity(config.n_block);
        for i in 0..config.n_block {
            let temporal = if config.flags.frequency_domain {
                Temporal::Complex(ComplexLinearLayer::init(&mut rng, len, config.complex_bias))
            } else {
                Temporal::Linear(LinearLayer::init(&mut rng, len, len))
            };
            let projection = if config.flags.random_projection {
                Projection::Random(RandomProjectionLayer::new(
                    n,
                    n_rand,
                    config.seed.wrapping_add(i as u64),
                ))
            } else {
                Projection::Trainable(LinearLayer::init(&mut rng, n, n_rand))
            };
            let spatial_out = LinearLayer::init(&mut rng, n_rand, n);
            blocks.push(MixerBlock::new(temporal, projection, spatial_out, activation)?);
        }
        let output = LinearLayer::init(&mut rng, len, config.t_future);
        Ok(Self {
            config,
            blocks,
            output,
            generation: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Bumped whenever parameters are handed out mutably.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Weights of the frozen projection layers, in block order.
    pub fn projection_weights(&self) -> Vec<&Tensor<T>> {
        self.blocks
            .iter()
            .filter_map(|b| match &b.projection {
                Projection::Random(l) => Some(l.weight()),
                Projection::Trainable(_) => None,
            })
            .collect()
    }

    /// Every persistent tensor (trainable or frozen) in checkpoint order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend(b.temporal.tensors());
            out.extend(b.projection.tensors());
            out.extend(b.spatial_out.tensors());
        }
        out.extend(self.output.tensors());
        out
    }

    /// Replaces every persistent tensor, in the order produced by [`RpMixer::tensors`].
    pub fn load_tensors(&mut self, tensors: Vec<Tensor<T>>) -> Result<()> {
        let expected: Vec<Vec<usize>> = self.tensors().iter().map(|t| t.shape().to_vec()).collect();
        if tensors.len() != expected.len() {
            return Err(Error::dim(
                "load_tensors",
                format!("model has {} tensors, got {}", expected.len(), tensors.len()),
            ));
        }
        for (i, (t, shape)) in tensors.iter().zip(&expected).enumerate() {
            if t.shape() != shape.as_slice() {
                return Err(Error::dim(
                    "load_tensors",
                    format!("tensor {i}: expected {:?}, got {:?}", shape, t.shape()),
                ));
            }
        }
        let mut it = tensors.into_iter();
        for b in &mut self.blocks {
            for slot in b.temporal.tensors_mut() {
                *slot = it.next().unwrap();
            }
            match &mut b.projection {
                Projection::Random(l) => {
                    let seed = l.seed();
                    *l = RandomProjectionLayer::from_weight(it.next().unwrap(), seed)?;
                }
                Projection::Trainable(l) => {
                    for slot in l.tensors_mut() {
                        *slot = it.next().unwrap();
                    }
                }
            }
            for slot in b.spatial_out.tensors_mut() {
                *slot = it.next().unwrap();
            }
        }
        for slot in self.output.tensors_mut() {
            *slot = it.next().unwrap();
        }
        self.generation += 1;
        Ok(())
    }

    /// Brings `[n, L]` or `[B, n, L]` input to batched form.
    fn batched(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, len) = (self.config.nodes, self.config.input_len());
        let shape = x.shape();
        let ok = match shape.len() {
            2 => shape == [n, len],
            3 => shape[1] == n && shape[2] == len,
            _ => false,
        };
        if !ok {
            return Err(Error::dim(
                "model input",
                format!("expected [.., {n}, {len}], got {:?}", shape),
            ));
        }
        if shape.len() == 2 {
            x.clone().reshape(&[1, n, len])
        } else {
            Ok(x.clone())
        }
    }

    fn unbatch(&self, y: Tensor<T>, input_shape: &[usize]) -> Result<Tensor<T>> {
        if input_shape.len() == 2 {
            let (n, last) = (y.shape()[1], y.shape()[2]);
            y.reshape(&[n, last])
        } else {
            Ok(y)
        }
    }

    /// Exact additive split of the prediction into the identity path and one
    /// term per block: `Y = D(X) + Σ W_D·H_i` with `H_i = G_i(X + Σ_{j<i} H_j)`.
    pub fn path_decompose(&self, x: &Tensor<T>) -> Result<PathDecomposition<T>> {
        if !self.config.flags.pre_activation {
            return Err(Error::Unsupported(
                "path decomposition needs identity skips; this model uses post-activation blocks"
                    .into(),
            ));
        }
        let input = self.batched(x)?;
        let base = self.output.forward(&input)?;
        let (rows, len, out) = (input.rows(), self.config.input_len(), self.config.t_future);
        let mut h = input.clone();
        let mut contributions = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let g = block.residual(&h)?;
            let mut c = vec![T::zero(); rows * out];
            matmul_nt_acc(g.data(), self.output.weight.data(), &mut c, rows, len, out);
            contributions.push(self.unbatch(Tensor::new(base.shape().to_vec(), c)?, x.shape())?);
            h.add_assign(&g)?;
        }
        let output = self.predict(x)?;
        Ok(PathDecomposition {
            base: self.unbatch(base, x.shape())?,
            contributions,
            output,
        })
    }
}

impl<T: Scalar> Forecaster<T> for RpMixer<T> {
    type Cache = ForwardCache<T>;

    fn nodes(&self) -> Option<usize> {
        Some(self.config.nodes)
    }

    fn input_len(&self) -> usize {
        self.config.input_len()
    }

    fn horizon(&self) -> usize {
        self.config.t_future
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, ForwardCache<T>)> {
        let mut h = self.batched(x)?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (y, cache) = block.forward(&h)?;
            caches.push(cache);
            h = y;
        }
        let y = self.output.forward(&h)?;
        let y = self.unbatch(y, x.shape())?;
        Ok((
            y,
            ForwardCache {
                generation: self.generation,
                input_shape: x.shape().to_vec(),
                blocks: caches,
                last_hidden: h,
            },
        ))
    }

    fn backward(&mut self, cache: ForwardCache<T>, grad_output: &Tensor<T>) -> Result<Tensor<T>> {
        if cache.generation != self.generation || cache.blocks.len() != self.blocks.len() {
            return Err(Error::Usage(
                "forward cache is stale: parameters changed since it was computed".into(),
            ));
        }
        let mut out_shape = cache.last_hidden.shape().to_vec();
        *out_shape.last_mut().unwrap() = self.config.t_future;
        let grad = grad_output.clone().reshape(&out_shape).map_err(|_| {
            Error::dim(
                "model backward",
                format!("gradient {:?} does not match output {:?}", grad_output.shape(), out_shape),
            )
        })?;
        let mut g = self.output.backward(&cache.last_hidden, &grad)?;
        for (block, bc) in self.blocks.iter_mut().zip(&cache.blocks).rev() {
            g = block.backward(bc, &g)?;
        }
        g.reshape(&cache.input_shape)
    }

    fn zero_grad(&mut self) {
        for b in &mut self.blocks {
            b.zero_grad();
        }
        self.output.zero_grad();
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        self.generation += 1;
        for b in &mut self.blocks {
            b.visit_params(f);
        }
        self.output.visit_params(f);
    }

    fn num_params(&self) -> usize {
        self.blocks.iter().map(|b| b.num_params()).sum::<usize>() + self.output.num_params()
    }
}

/// Cache for [`LinearForecaster`].
#[derive(Clone, Debug)]
pub struct LinearCache<T> {
    input: Tensor<T>,
}

/// One `L → horizon` affine map shared by every node.
#[derive(Clone, Debug)]
pub struct LinearForecaster<T> {
    pub layer: LinearLayer<T>,
}

impl<T: Scalar> LinearForecaster<T> {
    pub fn new(input_len: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed.wrapping_add(INIT_SEED_OFFSET));
        Self {
            layer: LinearLayer::init(&mut rng, input_len, horizon),
        }
    }
}

impl<T: Scalar> Forecaster<T> for LinearForecaster<T> {
    type Cache = LinearCache<T>;

    fn nodes(&self) -> Option<usize> {
        None
    }

    fn input_len(&self) -> usize {
        self.layer.input_dim()
    }

    fn horizon(&self) -> usize {
        self.layer.output_dim()
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, LinearCache<T>)> {
        let y = self.layer.forward(x)?;
        Ok((y, LinearCache { input: x.clone() }))
    }

    fn backward(&mut self, cache: LinearCache<T>, grad_output: &Tensor<T>) -> Result<Tensor<T>> {
        self.layer.backward(&cache.input, grad_output)
    }

    fn zero_grad(&mut self) {
        self.layer.zero_grad();
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        self.layer.visit_params(f);
    }

    fn num_params(&self) -> usize {
        self.layer.num_params()
    }
}
