use std::fmt::Write as _;
use std::time::Instant;

use super::adamw::{AdamW, AdamWConfig};
use super::early_stop::{EarlyStopper, StopDecision};
use super::loss::LossKind;
use super::standardize::Standardizer;
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::model::Forecaster;
use crate::tensor::{Scalar, SeededRng, Tensor};

/// Offset added to the experiment seed for the mini-batch shuffling stream.
pub const SHUFFLE_SEED_OFFSET: u64 = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Mae,
            max_epochs: 100,
            batch_size: 32,
            patience: 7,
            optimizer: AdamWConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mae: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_val: Option<f64>,
    pub stopped_early: bool,
}

impl History {
    /// Columns `epoch,train_loss,val_mae,lr,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_mae,lr,seconds\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{},{:.6}", r.epoch, r.train_loss, r.val_mae, r.lr, r.seconds);
        }
        out
    }

    /// The same table without wall-clock timings, byte-identical across reruns.
    pub fn to_csv_untimed(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_mae,lr\n");
        for r in &self.epochs {
            let _ = writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_mae, r.lr);
        }
        out
    }
}

pub struct TrainOutcome<T, M> {
    /// Weights from the best validation epoch (the initial model if no epoch ran).
    pub model: M,
    pub history: History,
    pub optimizer: AdamW<T>,
}

/// Forecasts for every sample, `[len, n, horizon]`, in dataset order.
pub fn predict_dataset<T: Scalar, M: Forecaster<T>>(
    model: &M,
    data: &WindowedDataset,
    batch_size: usize,
) -> Result<Tensor<T>> {
    let mut out = Vec::with_capacity(data.len() * data.nodes() * data.t_future());
    for range in data.batch_ranges(batch_size) {
        let indices: Vec<usize> = range.collect();
        let (x, _) = data.batch::<T>(&indices)?;
        out.extend_from_slice(model.predict(&x)?.data());
    }
    Tensor::new(vec![data.len(), data.nodes(), model.horizon()], out)
}

/// Mean absolute error of de-standardized forecasts over a dataset.
pub fn validation_mae<T: Scalar, M: Forecaster<T>>(
    model: &M,
    data: &WindowedDataset,
    scaler: &Standardizer,
    batch_size: usize,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("validation set has no windows".into()));
    }
    let pred = scaler.inverse_forecast(&predict_dataset::<T, M>(model, data, batch_size)?)?;
    let target = scaler.inverse_forecast(&data.targets::<T>())?;
    let total: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, y)| (p - y).abs())
        .sum();
    Ok(total / pred.len() as f64)
}

/// Trains with early stopping on the de-standardized validation MAE.
pub fn fit<T: Scalar, M: Forecaster<T>>(
    model: M,
    train: &WindowedDataset,
    val: &WindowedDataset,
    scaler: &Standardizer,
    config: &TrainConfig,
) -> Result<TrainOutcome<T, M>> {
    fit_observed(model, train, val, scaler, config, &mut |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_observed<T: Scalar, M: Forecaster<T>>(
    model: M,
    train: &WindowedDataset,
    val: &WindowedDataset,
    scaler: &Standardizer,
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome<T, M>> {
    if val.is_empty() {
        return Err(Error::Empty("validation set has no windows".into()));
    }
    let batch = config.batch_size;
    fit_with_validator(
        model,
        train,
        config,
        &mut |m: &M, _| validation_mae::<T, M>(m, val, scaler, batch),
        on_epoch,
    )
}

/// Epoch loop with an arbitrary validation metric (lower is better).
pub fn fit_with_validator<T: Scalar, M: Forecaster<T>>(
    mut model: M,
    train: &WindowedDataset,
    config: &TrainConfig,
    validator: &mut dyn FnMut(&M, usize) -> Result<f64>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome<T, M>> {
    config.optimizer.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set has no windows".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut optimizer = AdamW::new(config.optimizer);
    let mut stopper = EarlyStopper::new(config.patience);
    let mut history = History::default();
    let mut best = model.clone();
    let mut rng = SeededRng::new(config.seed.wrapping_add(SHUFFLE_SEED_OFFSET));
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let mut weighted_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let (x, y) = train.batch::<T>(chunk)?;
            model.zero_grad();
            let (pred, cache) = model.forward(&x)?;
            let (loss, grad) = config.loss.evaluate(&pred, &y)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("training loss at epoch {epoch}, batch {}", b + 1),
                });
            }
            model.backward(cache, &grad)?;
            optimizer.step_with(|f| model.visit_params(f))?;
            weighted_loss += loss * chunk.len() as f64;
        }
        let val_metric = validator(&model, epoch)?;
        if !val_metric.is_finite() {
            return Err(Error::NonFinite {
                context: format!("validation metric at epoch {epoch}"),
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: weighted_loss / train.len() as f64,
            val_mae: val_metric,
            lr: config.optimizer.lr,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
        match stopper.observe(epoch, val_metric) {
            StopDecision::Improved => best = model.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch();
    history.best_val = stopper.best();
    if history.epochs.is_empty() {
        best = model;
    }
    Ok(TrainOutcome {
        model: best,
        history,
        optimizer,
    })
}
