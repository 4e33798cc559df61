use crate::error::{Error, Result};
use crate::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, Scalar, SeededRng, Tensor};

/// Trainable affine map `y = x·Wᵀ + b` over the last axis.
#[derive(Clone, Debug)]
pub struct LinearLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub grad_weight: Tensor<T>,
    pub grad_bias: Tensor<T>,
}

impl<T: Scalar> LinearLayer<T> {
    /// Weights uniform on `±1/√in`, zero bias.
    pub fn init(rng: &mut SeededRng, input: usize, output: usize) -> Self {
        assert!(input >= 1 && output >= 1, "linear layer needs positive sizes");
        let bound = 1.0 / (input as f64).sqrt();
        let weight = rng.uniform_tensor(&[output, input], -bound, bound);
        Self::from_parts(weight, Tensor::zeros(&[output])).expect("shapes built consistently")
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self::from_parts(Tensor::zeros(&[output, input]), Tensor::zeros(&[output]))
            .expect("shapes built consistently")
    }

    pub fn from_parts(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::dim(
                "linear",
                format!("weight {:?} with bias {:?}", weight.shape(), bias.shape()),
            ));
        }
        Ok(Self {
            grad_weight: Tensor::zeros(weight.shape()),
            grad_bias: Tensor::zeros(bias.shape()),
            weight,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.rank() == 0 || x.last_dim() != self.input_dim() {
            return Err(Error::dim(
                "linear",
                format!(
                    "input {:?} does not end in {}",
                    x.shape(),
                    self.input_dim()
                ),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let (rows, inp, out) = (x.rows(), self.input_dim(), self.output_dim());
        let mut y = Vec::with_capacity(rows * out);
        for _ in 0..rows {
            y.extend_from_slice(self.bias.data());
        }
        matmul_nt_acc(x.data(), self.weight.data(), &mut y, rows, inp, out);
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = out;
        Tensor::new(shape, y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let (rows, inp, out) = (x.rows(), self.input_dim(), self.output_dim());
        if upstream.last_dim() != out || upstream.rows() != rows {
            return Err(Error::dim(
                "linear backward",
                format!("upstream {:?} for input {:?}", upstream.shape(), x.shape()),
            ));
        }
        matmul_tn_acc(upstream.data(), x.data(), self.grad_weight.data_mut(), rows, out, inp);
        let gb = self.grad_bias.data_mut();
        for row in upstream.data().chunks_exact(out) {
            for (g, &u) in gb.iter_mut().zip(row) {
                *g += u;
            }
        }
        let mut grad_in = vec![T::zero(); rows * inp];
        matmul_acc(upstream.data(), self.weight.data(), &mut grad_in, rows, out, inp);
        Tensor::new(x.shape().to_vec(), grad_in)
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        f(&mut self.weight, &self.grad_weight);
        f(&mut self.bias, &self.grad_bias);
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
