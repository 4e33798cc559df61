use crate::error::{Error, Result};
use crate::layers::{ComplexLinearLayer, LinearLayer, RandomProjectionLayer};
use crate::tensor::{Scalar, Tensor};

/// Temporal mixing layer: complex (spectral) by default, a plain `t×t`
/// linear map in the time-domain ablation.
#[derive(Clone, Debug)]
pub enum Temporal<T: Scalar> {
    Complex(ComplexLinearLayer<T>),
    Linear(LinearLayer<T>),
}

impl<T: Scalar> Temporal<T> {
    fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Temporal::Complex(l) => l.forward(x),
            Temporal::Linear(l) => l.forward(x),
        }
    }

    fn backward(&mut self, x: &Tensor<T>, up: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Temporal::Complex(l) => l.backward(x, up),
            Temporal::Linear(l) => l.backward(x, up),
        }
    }

    fn zero_grad(&mut self) {
        match self {
            Temporal::Complex(l) => l.zero_grad(),
            Temporal::Linear(l) => l.zero_grad(),
        }
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        match self {
            Temporal::Complex(l) => l.visit_params(f),
            Temporal::Linear(l) => l.visit_params(f),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Temporal::Complex(l) => l.num_params(),
            Temporal::Linear(l) => l.num_params(),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        match self {
            Temporal::Complex(l) => l.tensors(),
            Temporal::Linear(l) => l.tensors(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match self {
            Temporal::Complex(l) => l.tensors_mut(),
            Temporal::Linear(l) => l.tensors_mut(),
        }
    }
}

/// First layer of the spatial sub-block.
#[derive(Clone, Debug)]
pub enum Projection<T: Scalar> {
    Random(RandomProjectionLayer<T>),
    Trainable(LinearLayer<T>),
}

impl<T: Scalar> Projection<T> {
    pub fn output_dim(&self) -> usize {
        match self {
            Projection::Random(l) => l.output_dim(),
            Projection::Trainable(l) => l.output_dim(),
        }
    }

    fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Projection::Random(l) => l.forward(x),
            Projection::Trainable(l) => l.forward(x),
        }
    }

    fn backward(&mut self, x: &Tensor<T>, up: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Projection::Random(l) => l.backward(up),
            Projection::Trainable(l) => l.backward(x, up),
        }
    }

    fn zero_grad(&mut self) {
        if let Projection::Trainable(l) = self {
            l.zero_grad();
        }
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        if let Projection::Trainable(l) = self {
            l.visit_params(f);
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Projection::Random(_) => 0,
            Projection::Trainable(l) => l.num_params(),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        match self {
            Projection::Random(l) => vec![l.weight()],
            Projection::Trainable(l) => l.tensors(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationOrder {
    /// `ReLU` before each weighted layer; the block is `G(X) + X`.
    Pre,
    /// `ReLU` after the weighted layers and after each residual sum.
    Post,
}

/// Intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct BlockCache<T> {
    input: Tensor<T>,
    /// Input of the temporal layer.
    temporal_in: Tensor<T>,
    /// Post mode only: `F(X) + X` before its activation.
    temporal_sum: Option<Tensor<T>>,
    /// Input of the projection layer, `[.., t, n]`.
    proj_in: Tensor<T>,
    /// Pre mode: the transposed residual `Mᵀ` whose activation feeds the projection.
    mid_t: Tensor<T>,
    proj_out: Tensor<T>,
    hidden: Tensor<T>,
    /// Post mode only: the final residual sum before its activation.
    out_sum: Option<Tensor<T>>,
}

/// One temporal + spatial mixing unit mapping `[.., n, t]` to `[.., n, t]`.
#[derive(Clone, Debug)]
pub struct MixerBlock<T: Scalar> {
    pub temporal: Temporal<T>,
    pub projection: Projection<T>,
    pub spatial_out: LinearLayer<T>,
    pub activation: ActivationOrder,
}

impl<T: Scalar> MixerBlock<T> {
    pub fn new(
        temporal: Temporal<T>,
        projection: Projection<T>,
        spatial_out: LinearLayer<T>,
        activation: ActivationOrder,
    ) -> Result<Self> {
        if projection.output_dim() != spatial_out.input_dim() {
            return Err(Error::dim(
                "mixer block",
                format!(
                    "projection emits {} features, spatial output layer takes {}",
                    projection.output_dim(),
                    spatial_out.input_dim()
                ),
            ));
        }
        Ok(Self {
            temporal,
            projection,
            spatial_out,
            activation,
        })
    }

    pub fn num_params(&self) -> usize {
        self.temporal.num_params() + self.projection.num_params() + self.spatial_out.num_params()
    }

    pub fn zero_grad(&mut self) {
        self.temporal.zero_grad();
        self.projection.zero_grad();
        self.spatial_out.zero_grad();
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        self.temporal.visit_params(f);
        self.projection.visit_params(f);
        self.spatial_out.visit_params(f);
    }

    fn check(&self, x: &Tensor<T>) -> Result<()> {
        if x.rank() < 2 {
            return Err(Error::dim("mixer block", format!("input {:?} is not a matrix", x.shape())));
        }
        Ok(())
    }

    /// Temporal weighted path `F_temp(X) = ComplexLinear(ReLU(X))`.
    pub fn temporal_path(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.temporal.forward(&x.relu())
    }

    /// Spatial weighted path `F_sp(M) = Linear(ReLU(RandProject(ReLU(Mᵀ))))ᵀ`.
    pub fn spatial_path(&self, m: &Tensor<T>) -> Result<Tensor<T>> {
        let a = m.transpose()?.relu();
        let p = self.projection.forward(&a)?.relu();
        self.spatial_out.forward(&p)?.transpose()
    }

    /// Weighted branch `G(X) = F_sp(F_temp(X) + X) + F_temp(X)` of a
    /// pre-activation block, so that the block output is `G(X) + X`.
    pub fn residual(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if self.activation != ActivationOrder::Pre {
            return Err(Error::Unsupported(
                "post-activation blocks have no identity path, so G(X) is undefined".into(),
            ));
        }
        self.check(x)?;
        let t = self.temporal_path(x)?;
        let s = self.spatial_path(&t.add(x)?)?;
        s.add(&t)
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BlockCache<T>)> {
        self.check(x)?;
        match self.activation {
            ActivationOrder::Pre => {
                let temporal_in = x.relu();
                let t = self.temporal.forward(&temporal_in)?;
                let m = t.add(x)?;
                let mid_t = m.transpose()?;
                let proj_in = mid_t.relu();
                let proj_out = self.projection.forward(&proj_in)?;
                let hidden = proj_out.relu();
                let s = self.spatial_out.forward(&hidden)?.transpose()?;
                let y = s.add(&m)?;
                Ok((
                    y,
                    BlockCache {
                        input: x.clone(),
                        temporal_in,
                        temporal_sum: None,
                        proj_in,
                        mid_t,
                        proj_out,
                        hidden,
                        out_sum: None,
                    },
                ))
            }
            ActivationOrder::Post => {
                let u = self.temporal.forward(x)?.add(x)?;
                let m = u.relu();
                let proj_in = m.transpose()?;
                let proj_out = self.projection.forward(&proj_in)?;
                let hidden = proj_out.relu();
                let v = self.spatial_out.forward(&hidden)?.transpose()?.add(&m)?;
                let y = v.relu();
                Ok((
                    y,
                    BlockCache {
                        input: x.clone(),
                        temporal_in: x.clone(),
                        temporal_sum: Some(u),
                        mid_t: proj_in.clone(),
                        proj_in,
                        proj_out,
                        hidden,
                        out_sum: Some(v),
                    },
                ))
            }
        }
    }

    pub fn backward(&mut self, cache: &BlockCache<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        if upstream.shape() != cache.input.shape() {
            return Err(Error::dim(
                "mixer block backward",
                format!("upstream {:?} vs input {:?}", upstream.shape(), cache.input.shape()),
            ));
        }
        match self.activation {
            ActivationOrder::Pre => {
                // Y = S + M
                let g_q = upstream.transpose()?;
                let g_hidden = self.spatial_out.backward(&cache.hidden, &g_q)?;
                let g_proj = cache.proj_out.relu_backward(&g_hidden)?;
                let g_a = self.projection.backward(&cache.proj_in, &g_proj)?;
                let g_mid_t = cache.mid_t.relu_backward(&g_a)?;
                let mut g_m = g_mid_t.transpose()?;
                g_m.add_assign(upstream)?;
                // M = F_temp(X) + X
                let g_tin = self.temporal.backward(&cache.temporal_in, &g_m)?;
                let mut g_x = cache.input.relu_backward(&g_tin)?;
                g_x.add_assign(&g_m)?;
                Ok(g_x)
            }
            ActivationOrder::Post => {
                let v = cache.out_sum.as_ref().expect("post-activation cache");
                let u = cache.temporal_sum.as_ref().expect("post-activation cache");
                let g_v = v.relu_backward(upstream)?;
                let g_q = g_v.transpose()?;
                let g_hidden = self.spatial_out.backward(&cache.hidden, &g_q)?;
                let g_proj = cache.proj_out.relu_backward(&g_hidden)?;
                let g_mt = self.projection.backward(&cache.proj_in, &g_proj)?;
                let mut g_m = g_mt.transpose()?;
                g_m.add_assign(&g_v)?;
                let g_u = u.relu_backward(&g_m)?;
                let mut g_x = self.temporal.backward(&cache.temporal_in, &g_u)?;
                g_x.add_assign(&g_u)?;
                Ok(g_x)
            }
        }
    }
}
