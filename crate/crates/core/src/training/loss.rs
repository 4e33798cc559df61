use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossKind {
    #[default]
    Mae,
    Mse,
}

impl LossKind {
    pub fn evaluate<T: Scalar>(self, pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
        match self {
            LossKind::Mae => mae_loss(pred, target),
            LossKind::Mse => mse_loss(pred, target),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mae" => Ok(LossKind::Mae),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Config(format!("unknown loss '{other}', expected mae or mse"))),
        }
    }
}

fn check(op: &'static str, pred: &Tensor<impl Scalar>, target: &Tensor<impl Scalar>) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(
            op,
            format!("prediction {:?} vs target {:?}", pred.shape(), target.shape()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Empty(format!("{op} over zero elements")));
    }
    Ok(())
}

/// Mean absolute error and its gradient `sign(pred − target)/count`, zero at ties.
pub fn mae_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    check("mae loss", pred, target)?;
    let count = pred.len() as f64;
    let step = T::lit(1.0 / count);
    let mut total = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &y)| {
            let e = p - y;
            total += e.as_f64().abs();
            if e > T::zero() {
                step
            } else if e < T::zero() {
                -step
            } else {
                T::zero()
            }
        })
        .collect();
    Ok((total / count, Tensor::new(pred.shape().to_vec(), grad)?))
}

/// Mean squared error and its gradient `2(pred − target)/count`.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    check("mse loss", pred, target)?;
    let count = pred.len() as f64;
    let scale = T::lit(2.0 / count);
    let mut total = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &y)| {
            let e = p - y;
            total += e.as_f64() * e.as_f64();
            scale * e
        })
        .collect();
    Ok((total / count, Tensor::new(pred.shape().to_vec(), grad)?))
}
