//! Real-input discrete Fourier transform pair.
//!
//! Forward is unnormalized, inverse carries the 1/t factor. Spectra are
//! one-sided with `t/2 + 1` bins, DC first. Arbitrary lengths are handled by
//! `rustfft`, which picks mixed-radix, Rader or Bluestein plans as needed.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Number of one-sided bins for a real signal of length `len`.
pub fn bin_count(len: usize) -> usize {
    len / 2 + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum<T> {
    pub real: Tensor<T>,
    pub imag: Tensor<T>,
}

impl<T: Scalar> ComplexSpectrum<T> {
    pub fn new(real: Tensor<T>, imag: Tensor<T>) -> Result<Self> {
        if real.shape() != imag.shape() {
            return Err(Error::dim(
                "spectrum",
                format!("real {:?} vs imag {:?}", real.shape(), imag.shape()),
            ));
        }
        Ok(Self { real, imag })
    }

    pub fn bins(&self) -> usize {
        self.real.last_dim()
    }
}

/// Cached forward/inverse plans for one transform length.
#[derive(Clone)]
pub struct RealFft<T: Scalar> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> fmt::Debug for RealFft<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

impl<T: Scalar> RealFft<T> {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn bins(&self) -> usize {
        bin_count(self.len)
    }

    /// Transforms every length-`len` row of `input`, writing one-sided spectra.
    pub fn forward_rows(&self, input: &[T], re: &mut [T], im: &mut [T]) {
        let (t, b) = (self.len, self.bins());
        let rows = input.len() / t;
        debug_assert_eq!(re.len(), rows * b);
        debug_assert_eq!(im.len(), rows * b);
        if rows == 0 {
            return;
        }
        let mut buf: Vec<Complex<T>> = input.iter().map(|&v| Complex::new(v, T::zero())).collect();
        let mut scratch = vec![Complex::default(); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for r in 0..rows {
            let row = &buf[r * t..r * t + b];
            for (k, c) in row.iter().enumerate() {
                re[r * b + k] = c.re;
                im[r * b + k] = c.im;
            }
        }
    }

    /// Inverse of [`RealFft::forward_rows`]. The spectrum is extended by
    /// Hermitian symmetry and the real part of the inverse is returned, so any
    /// imaginary content at DC (and at Nyquist for even lengths) is discarded.
    pub fn inverse_rows(&self, re: &[T], im: &[T], out: &mut [T]) {
        let (t, b) = (self.len, self.bins());
        let rows = re.len() / b;
        debug_assert_eq!(im.len(), rows * b);
        debug_assert_eq!(out.len(), rows * t);
        if rows == 0 {
            return;
        }
        let mut buf = vec![Complex::<T>::default(); rows * t];
        for r in 0..rows {
            let row = &mut buf[r * t..(r + 1) * t];
            for k in 0..b {
                row[k] = Complex::new(re[r * b + k], im[r * b + k]);
            }
            for k in 1..t - b + 1 {
                row[t - k] = Complex::new(re[r * b + k], -im[r * b + k]);
            }
        }
        let mut scratch = vec![Complex::default(); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let scale = T::one() / T::lit(t as f64);
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re * scale;
        }
    }
}

/// One-sided DFT along the last axis.
pub fn rfft<T: Scalar>(signal: &Tensor<T>) -> ComplexSpectrum<T> {
    let t = signal.last_dim();
    let plan = RealFft::new(t);
    let b = plan.bins();
    let mut shape = signal.shape().to_vec();
    if let Some(last) = shape.last_mut() {
        *last = b;
    } else {
        shape.push(b);
    }
    let mut re = Tensor::zeros(&shape);
    let mut im = Tensor::zeros(&shape);
    plan.forward_rows(signal.data(), re.data_mut(), im.data_mut());
    ComplexSpectrum { real: re, imag: im }
}

/// Real inverse DFT producing length-`t` rows.
pub fn irfft<T: Scalar>(spectrum: &ComplexSpectrum<T>, t: usize) -> Result<Tensor<T>> {
    if t == 0 || spectrum.bins() != bin_count(t) {
        return Err(Error::dim(
            "irfft",
            format!(
                "{} bins cannot describe a length-{} signal (expected {})",
                spectrum.bins(),
                t,
                bin_count(t)
            ),
        ));
    }
    if spectrum.real.shape() != spectrum.imag.shape() {
        return Err(Error::dim("irfft", "real and imaginary shapes differ"));
    }
    let plan = RealFft::new(t);
    let mut shape = spectrum.real.shape().to_vec();
    *shape.last_mut().expect("spectrum has at least one axis") = t;
    let mut out = Tensor::zeros(&shape);
    plan.inverse_rows(spectrum.real.data(), spectrum.imag.data(), out.data_mut());
    Ok(out)
}
