//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use std::f64::consts::PI;

use rpmixer::model::Forecaster;
use rpmixer::{SeededRng, Tensor};

/// Central-difference gradient of `f` at `x`.
pub fn central_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest elementwise relative error; entries where both sides are below
/// `floor` in magnitude are compared absolutely against `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < floor {
                (a - n).abs() / floor
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn flat_params<M: Forecaster<f64>>(model: &mut M) -> Vec<f64> {
    let mut out = Vec::new();
    model.visit_params(&mut |p, _| out.extend_from_slice(p.data()));
    out
}

pub fn flat_grads<M: Forecaster<f64>>(model: &mut M) -> Vec<f64> {
    let mut out = Vec::new();
    model.visit_params(&mut |_, g| out.extend_from_slice(g.data()));
    out
}

pub fn set_params<M: Forecaster<f64>>(model: &mut M, values: &[f64]) {
    let mut offset = 0;
    model.visit_params(&mut |p, _| {
        let n = p.len();
        p.data_mut().copy_from_slice(&values[offset..offset + n]);
        offset += n;
    });
}

/// Projects the output on fixed random weights to get a scalar loss.
pub fn weighted_sum(y: &Tensor<f64>, w: &Tensor<f64>) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

/// Checks every parameter and input gradient of `model` at `x` against
/// central differences. Returns (parameter error, input error).
pub fn check_forecaster<M: Forecaster<f64>>(model: &M, x: &Tensor<f64>, rng: &mut SeededRng) -> (f64, f64) {
    let mut m = model.clone();
    let (y, cache) = m.forward(x).unwrap();
    let w: Tensor<f64> = rng.randn(y.shape());
    m.zero_grad();
    let gx = m.backward(cache, &w).unwrap();
    let analytic = flat_grads(&mut m);
    let theta = flat_params(&mut m);

    let numeric = central_difference(&theta, 1e-6, |p| {
        let mut probe = m.clone();
        set_params(&mut probe, p);
        weighted_sum(&probe.predict(x).unwrap(), &w)
    });
    let numeric_x = central_difference(x.data(), 1e-6, |v| {
        let xi = Tensor::new(x.shape().to_vec(), v.to_vec()).unwrap();
        weighted_sum(&m.predict(&xi).unwrap(), &w)
    });
    (
        max_relative_error(&analytic, &numeric, 1e-6),
        max_relative_error(gx.data(), &numeric_x, 1e-6),
    )
}

/// Naive one-sided DFT of one row.
pub fn naive_rfft(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let t = x.len();
    (0..t / 2 + 1)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, &v)| {
                let a = 2.0 * PI * (j * k) as f64 / t as f64;
                (re + v * a.cos(), im - v * a.sin())
            })
        })
        .unzip()
}

/// Naive real inverse: Hermitian extension, complex inverse DFT, real part.
pub fn naive_irfft(re: &[f64], im: &[f64], t: usize) -> Vec<f64> {
    let b = re.len();
    let mut full = vec![(0.0, 0.0); t];
    for k in 0..b {
        full[k] = (re[k], im[k]);
    }
    for k in 1..=t - b {
        full[t - k] = (re[k], -im[k]);
    }
    (0..t)
        .map(|j| {
            full.iter().enumerate().fold(0.0, |acc, (k, &(a, b))| {
                let ang = 2.0 * PI * (j * k) as f64 / t as f64;
                acc + a * ang.cos() - b * ang.sin()
            }) / t as f64
        })
        .collect()
}

/// Complex linear layer computed with explicit complex arithmetic.
pub fn naive_complex_linear(
    x: &[f64],
    w_re: &[f64],
    w_im: &[f64],
    b_re: &[f64],
    b_im: &[f64],
) -> Vec<f64> {
    let t = x.len();
    let b = t / 2 + 1;
    let (xr, xi) = naive_rfft(x);
    let mut zr = vec![0.0; b];
    let mut zi = vec![0.0; b];
    for k in 0..b {
        let (mut accr, mut acci) = (b_re[k], b_im[k]);
        for l in 0..b {
            // (a + ib)(c + id) = (ac - bd) + i(ad + bc)
            let (a, bb) = (w_re[k * b + l], w_im[k * b + l]);
            let (c, d) = (xr[l], xi[l]);
            accr += a * c - bb * d;
            acci += a * d + bb * c;
        }
        zr[k] = accr;
        zi[k] = acci;
    }
    naive_irfft(&zr, &zi, t)
}
