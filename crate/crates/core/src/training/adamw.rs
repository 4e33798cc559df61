use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr.is_finite()
            && self.lr >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay.is_finite()
            && self.weight_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Adam with decoupled weight decay.
///
/// Moment buffers are created on the first step, one per visited parameter,
/// so parameters a model does not visit (frozen projections) carry no state
/// and are never touched.
#[derive(Clone, Debug)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Restores a saved state; `m` and `v` must pair up.
    pub fn from_state(config: AdamWConfig, step: u64, m: Vec<Tensor<T>>, v: Vec<Tensor<T>>) -> Result<Self> {
        if m.len() != v.len() || m.iter().zip(&v).any(|(a, b)| a.shape() != b.shape()) {
            return Err(Error::dim("optimizer state", "first and second moments disagree"));
        }
        Ok(Self { config, step, m, v })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor<T>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor<T>] {
        &self.v
    }

    /// One update over the parameters presented by `visit`, which must yield
    /// the same parameters in the same order on every call.
    pub fn step_with(&mut self, visit: impl FnOnce(&mut dyn FnMut(&mut Tensor<T>, &Tensor<T>))) -> Result<()> {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - c.beta1.powi(t);
        let correction2 = 1.0 - c.beta2.powi(t);
        let first_step = self.m.is_empty();
        let (m_all, v_all) = (&mut self.m, &mut self.v);
        let mut index = 0usize;
        let mut failure = None;
        visit(&mut |param: &mut Tensor<T>, grad: &Tensor<T>| {
            if failure.is_some() {
                return;
            }
            if param.shape() != grad.shape() {
                failure = Some(Error::dim(
                    "adamw",
                    format!("parameter {:?} vs gradient {:?}", param.shape(), grad.shape()),
                ));
                return;
            }
            if first_step {
                m_all.push(Tensor::zeros(param.shape()));
                v_all.push(Tensor::zeros(param.shape()));
            }
            let (Some(m), Some(v)) = (m_all.get_mut(index), v_all.get_mut(index)) else {
                failure = Some(Error::dim("adamw", "more parameters than optimizer state"));
                return;
            };
            if m.shape() != param.shape() {
                failure = Some(Error::dim(
                    "adamw",
                    format!("state {:?} vs parameter {:?}", m.shape(), param.shape()),
                ));
                return;
            }
            index += 1;
            for (((p, &g), mi), vi) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                let g = g.as_f64();
                let m_new = c.beta1 * mi.as_f64() + (1.0 - c.beta1) * g;
                let v_new = c.beta2 * vi.as_f64() + (1.0 - c.beta2) * g * g;
                let m_hat = m_new / correction1;
                let v_hat = v_new / correction2;
                let theta = p.as_f64();
                *p = T::lit(theta - c.lr * m_hat / (v_hat.sqrt() + c.eps) - c.lr * c.weight_decay * theta);
                *mi = T::lit(m_new);
                *vi = T::lit(v_new);
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if index != self.m.len() {
            return Err(Error::dim(
                "adamw",
                format!("visited {index} parameters, state holds {}", self.m.len()),
            ));
        }
        Ok(())
    }

    /// Updates explicit parameter/gradient pairs.
    pub fn step_tensors(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dim(
                "adamw",
                format!("{} parameters vs {} gradients", params.len(), grads.len()),
            ));
        }
        self.step_with(|f| {
            for (p, g) in params.iter_mut().zip(grads) {
                f(p, g);
            }
        })
    }
}
