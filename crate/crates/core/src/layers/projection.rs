use crate::error::{Error, Result};
use crate::tensor::{matmul_acc, matmul_nt_acc, Scalar, SeededRng, Tensor};

/// Fixed linear projection `y = x·Wᵀ` with unscaled standard-normal weights
/// and no bias. The weight carries no gradient buffer and is never updated.
#[derive(Clone, Debug)]
pub struct RandomProjectionLayer<T> {
    weight: Tensor<T>,
    seed: u64,
}

impl<T: Scalar> RandomProjectionLayer<T> {
    pub fn new(input: usize, output: usize, seed: u64) -> Self {
        let weight = SeededRng::new(seed).randn(&[output, input]);
        Self { weight, seed }
    }

    /// Rebuilds a layer from stored weights (checkpoint restore).
    pub fn from_weight(weight: Tensor<T>, seed: u64) -> Result<Self> {
        if weight.rank() != 2 {
            return Err(Error::dim("random projection", format!("weight {:?}", weight.shape())));
        }
        Ok(Self { weight, seed })
    }

    pub fn weight(&self) -> &Tensor<T> {
        &self.weight
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() == 0 || x.last_dim() != self.input_dim() {
            return Err(Error::dim(
                "random projection",
                format!("input {:?} does not end in {}", x.shape(), self.input_dim()),
            ));
        }
        let (rows, inp, out) = (x.rows(), self.input_dim(), self.output_dim());
        let mut y = vec![T::zero(); rows * out];
        matmul_nt_acc(x.data(), self.weight.data(), &mut y, rows, inp, out);
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = out;
        Tensor::new(shape, y)
    }

    /// Input gradient only.
    pub fn backward(&self, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        if upstream.rank() == 0 || upstream.last_dim() != self.output_dim() {
            return Err(Error::dim(
                "random projection backward",
                format!("upstream {:?} does not end in {}", upstream.shape(), self.output_dim()),
            ));
        }
        let (rows, inp, out) = (upstream.rows(), self.input_dim(), self.output_dim());
        let mut g = vec![T::zero(); rows * inp];
        matmul_acc(upstream.data(), self.weight.data(), &mut g, rows, out, inp);
        let mut shape = upstream.shape().to_vec();
        *shape.last_mut().unwrap() = inp;
        Tensor::new(shape, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_in_zeros_out() {
        let layer = RandomProjectionLayer::<f64>::new(16, 4, 0);
        assert_eq!(layer.forward(&Tensor::zeros(&[3, 16])).unwrap().max_abs(), 0.0);
        assert_eq!(layer.backward(&Tensor::zeros(&[3, 4])).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn same_seed_same_layer() {
        let a = RandomProjectionLayer::<f32>::new(10, 3, 77);
        let b = RandomProjectionLayer::<f32>::new(10, 3, 77);
        assert_eq!(a.weight(), b.weight());
        let x: Tensor<f32> = SeededRng::new(1).randn(&[2, 10]);
        assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
        assert_ne!(a.weight(), RandomProjectionLayer::<f32>::new(10, 3, 78).weight());
    }

    #[test]
    fn matches_naive_product() {
        let layer = RandomProjectionLayer::<f64>::new(7, 5, 3);
        let x: Tensor<f64> = SeededRng::new(2).randn(&[4, 7]);
        let y = layer.forward(&x).unwrap();
        let w = layer.weight().data();
        for r in 0..4 {
            for o in 0..5 {
                let want: f64 = (0..7).map(|i| x.data()[r * 7 + i] * w[o * 7 + i]).sum();
                assert!((y.data()[r * 5 + o] - want).abs() < 1e-12);
            }
        }
    }
}
