//! Losses, the optimizer, standardization, early stopping and the epoch loop.

mod adamw;
mod early_stop;
mod fit;
mod loss;
mod standardize;

pub use adamw::{AdamW, AdamWConfig};
pub use early_stop::{EarlyStopper, StopDecision};
pub use fit::{
    fit, fit_observed, fit_with_validator, predict_dataset, validation_mae, EpochRecord, History, TrainConfig,
    TrainOutcome, SHUFFLE_SEED_OFFSET,
};
pub use loss::{mae_loss, mse_loss, LossKind};
pub use standardize::Standardizer;
