use crate::error::{Error, Result};
use crate::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, RealFft, Scalar, SeededRng, Tensor};

#[derive(Clone, Debug)]
pub struct ComplexBias<T> {
    pub real: Tensor<T>,
    pub imag: Tensor<T>,
    pub grad_real: Tensor<T>,
    pub grad_imag: Tensor<T>,
}

/// Linear map with complex weights applied to the one-sided spectrum of each
/// row, followed by the inverse transform back to the time domain.
///
/// With `X = rfft(x)`:
///
/// ```text
/// Z_re = W_re·X_re − W_im·X_im + b_re
/// Z_im = W_re·X_im + W_im·X_re + b_im
/// y    = irfft(Z, t)
/// ```
///
/// so output rows have the same length `t` as the input rows.
#[derive(Clone, Debug)]
pub struct ComplexLinearLayer<T: Scalar> {
    len: usize,
    fft: RealFft<T>,
    pub w_real: Tensor<T>,
    pub w_imag: Tensor<T>,
    pub grad_w_real: Tensor<T>,
    pub grad_w_imag: Tensor<T>,
    pub bias: Option<ComplexBias<T>>,
}

struct Spectrum<T> {
    re: Vec<T>,
    im: Vec<T>,
}

impl<T: Scalar> ComplexLinearLayer<T> {
    /// Each weight component uniform on `±1/√bins`; biases (when enabled) start at zero.
    pub fn init(rng: &mut SeededRng, len: usize, with_bias: bool) -> Self {
        let b = len / 2 + 1;
        let bound = 1.0 / (b as f64).sqrt();
        let w_real = rng.uniform_tensor(&[b, b], -bound, bound);
        let w_imag = rng.uniform_tensor(&[b, b], -bound, bound);
        let bias = with_bias.then(|| (Tensor::zeros(&[b]), Tensor::zeros(&[b])));
        Self::from_parts(len, w_real, w_imag, bias).expect("shapes built consistently")
    }

    pub fn zeros(len: usize, with_bias: bool) -> Self {
        let b = len / 2 + 1;
        let bias = with_bias.then(|| (Tensor::zeros(&[b]), Tensor::zeros(&[b])));
        Self::from_parts(len, Tensor::zeros(&[b, b]), Tensor::zeros(&[b, b]), bias)
            .expect("shapes built consistently")
    }

    /// Identity on the spectrum, hence on the signal.
    pub fn identity(len: usize, with_bias: bool) -> Self {
        let mut layer = Self::zeros(len, with_bias);
        layer.w_real = Tensor::eye(len / 2 + 1);
        layer
    }

    pub fn from_parts(
        len: usize,
        w_real: Tensor<T>,
        w_imag: Tensor<T>,
        bias: Option<(Tensor<T>, Tensor<T>)>,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::dim("complex linear", "signal length must be positive"));
        }
        let b = len / 2 + 1;
        if w_real.shape() != [b, b] || w_imag.shape() != [b, b] {
            return Err(Error::dim(
                "complex linear",
                format!(
                    "length {len} needs {b}x{b} weights, got {:?} and {:?}",
                    w_real.shape(),
                    w_imag.shape()
                ),
            ));
        }
        let bias = match bias {
            Some((real, imag)) => {
                if real.shape() != [b] || imag.shape() != [b] {
                    return Err(Error::dim(
                        "complex linear",
                        format!("bias shapes {:?}/{:?}, expected [{b}]", real.shape(), imag.shape()),
                    ));
                }
                Some(ComplexBias {
                    grad_real: Tensor::zeros(&[b]),
                    grad_imag: Tensor::zeros(&[b]),
                    real,
                    imag,
                })
            }
            None => None,
        };
        Ok(Self {
            len,
            fft: RealFft::new(len),
            grad_w_real: Tensor::zeros(&[b, b]),
            grad_w_imag: Tensor::zeros(&[b, b]),
            w_real,
            w_imag,
            bias,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn num_params(&self) -> usize {
        self.w_real.len() + self.w_imag.len() + self.bias.as_ref().map_or(0, |b| 2 * b.real.len())
    }

    fn check(&self, x: &Tensor<T>, op: &'static str) -> Result<()> {
        if x.rank() == 0 || x.last_dim() != self.len {
            return Err(Error::dim(
                op,
                format!(
                    "input {:?} has {} frequency bins, layer expects {} (length {})",
                    x.shape(),
                    x.last_dim() / 2 + 1,
                    self.bins(),
                    self.len
                ),
            ));
        }
        Ok(())
    }

    fn spectrum(&self, x: &[T]) -> Spectrum<T> {
        let n = x.len() / self.len * self.bins();
        let mut re = vec![T::zero(); n];
        let mut im = vec![T::zero(); n];
        self.fft.forward_rows(x, &mut re, &mut im);
        Spectrum { re, im }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x, "complex linear")?;
        let b = self.bins();
        let rows = x.rows();
        let xs = self.spectrum(x.data());

        let mut zr = vec![T::zero(); rows * b];
        let mut zi = vec![T::zero(); rows * b];
        let neg_wi: Vec<T> = self.w_imag.data().iter().map(|&v| -v).collect();
        matmul_nt_acc(&xs.re, self.w_real.data(), &mut zr, rows, b, b);
        matmul_nt_acc(&xs.im, &neg_wi, &mut zr, rows, b, b);
        matmul_nt_acc(&xs.im, self.w_real.data(), &mut zi, rows, b, b);
        matmul_nt_acc(&xs.re, self.w_imag.data(), &mut zi, rows, b, b);
        if let Some(bias) = &self.bias {
            for (row_r, row_i) in zr.chunks_exact_mut(b).zip(zi.chunks_exact_mut(b)) {
                for k in 0..b {
                    row_r[k] += bias.real.data()[k];
                    row_i[k] += bias.imag.data()[k];
                }
            }
        }

        let mut y = Tensor::zeros(x.shape());
        self.fft.inverse_rows(&zr, &zi, y.data_mut());
        Ok(y)
    }

    /// Bins with a Hermitian mirror contribute twice to the real inverse.
    fn bin_weight(&self, k: usize) -> T {
        if k == 0 || k > self.len - self.bins() {
            T::one()
        } else {
            T::lit(2.0)
        }
    }

    /// Accumulates all weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        self.check(x, "complex linear backward")?;
        if upstream.shape() != x.shape() {
            return Err(Error::dim(
                "complex linear backward",
                format!("upstream {:?} vs input {:?}", upstream.shape(), x.shape()),
            ));
        }
        let b = self.bins();
        let t = T::lit(self.len as f64);
        let rows = x.rows();
        let xs = self.spectrum(x.data());

        // Adjoint of the real inverse: scaled forward transform of the upstream
        // gradient; imaginary parts at unmirrored bins never reach the output.
        let gs = self.spectrum(upstream.data());
        let mut dzr = gs.re;
        let mut dzi = gs.im;
        for k in 0..b {
            let w = self.bin_weight(k) / t;
            let keep_imag = w > T::one() / t;
            for r in 0..rows {
                dzr[r * b + k] *= w;
                dzi[r * b + k] = if keep_imag { dzi[r * b + k] * w } else { T::zero() };
            }
        }

        let neg_dzr: Vec<T> = dzr.iter().map(|&v| -v).collect();
        matmul_tn_acc(&dzr, &xs.re, self.grad_w_real.data_mut(), rows, b, b);
        matmul_tn_acc(&dzi, &xs.im, self.grad_w_real.data_mut(), rows, b, b);
        matmul_tn_acc(&neg_dzr, &xs.im, self.grad_w_imag.data_mut(), rows, b, b);
        matmul_tn_acc(&dzi, &xs.re, self.grad_w_imag.data_mut(), rows, b, b);
        if let Some(bias) = &mut self.bias {
            for (row_r, row_i) in dzr.chunks_exact(b).zip(dzi.chunks_exact(b)) {
                for k in 0..b {
                    bias.grad_real.data_mut()[k] += row_r[k];
                    bias.grad_imag.data_mut()[k] += row_i[k];
                }
            }
        }

        let mut dxr = vec![T::zero(); rows * b];
        let mut dxi = vec![T::zero(); rows * b];
        matmul_acc(&dzr, self.w_real.data(), &mut dxr, rows, b, b);
        matmul_acc(&dzi, self.w_imag.data(), &mut dxr, rows, b, b);
        matmul_acc(&neg_dzr, self.w_imag.data(), &mut dxi, rows, b, b);
        matmul_acc(&dzi, self.w_real.data(), &mut dxi, rows, b, b);

        // Adjoint of the forward transform: t · irfft(dX / bin_weight).
        for k in 0..b {
            let s = t / self.bin_weight(k);
            for r in 0..rows {
                dxr[r * b + k] *= s;
                dxi[r * b + k] *= s;
            }
        }
        let mut grad_in = Tensor::zeros(x.shape());
        self.fft.inverse_rows(&dxr, &dxi, grad_in.data_mut());
        Ok(grad_in)
    }

    pub fn zero_grad(&mut self) {
        self.grad_w_real.fill(T::zero());
        self.grad_w_imag.fill(T::zero());
        if let Some(bias) = &mut self.bias {
            bias.grad_real.fill(T::zero());
            bias.grad_imag.fill(T::zero());
        }
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor<T>, &Tensor<T>)) {
        f(&mut self.w_real, &self.grad_w_real);
        f(&mut self.w_imag, &self.grad_w_imag);
        if let Some(bias) = &mut self.bias {
            f(&mut bias.real, &bias.grad_real);
            f(&mut bias.imag, &bias.grad_imag);
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = vec![&self.w_real, &self.w_imag];
        if let Some(bias) = &self.bias {
            out.push(&bias.real);
            out.push(&bias.imag);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = vec![&mut self.w_real, &mut self.w_imag];
        if let Some(bias) = &mut self.bias {
            out.push(&mut bias.real);
            out.push(&mut bias.imag);
        }
        out
    }
}
