use rpmixer::data::{chronological_split, make_windows, synthetic_generate, SyntheticSpec, WindowedDataset};
use rpmixer::model::{build_model, Forecaster, LinearForecaster, ModelConfig, RpMixer};
use rpmixer::training::{fit, fit_with_validator, LossKind, Standardizer, TrainConfig};
use rpmixer::Error;

struct Setup {
    train: WindowedDataset,
    val: WindowedDataset,
    scaler: Standardizer,
}

fn setup(nodes: usize, steps: usize) -> Setup {
    let spec = SyntheticSpec {
        nodes,
        steps,
        seed: 11,
        ..SyntheticSpec::default()
    };
    let raw = synthetic_generate(&spec).unwrap();
    let (train, val, _) = chronological_split(&raw, [6, 2, 2]).unwrap();
    let scaler = Standardizer::fit(&train).unwrap();
    Setup {
        train: make_windows(&scaler.transform(&train).unwrap(), 12, 12, 1).unwrap(),
        val: make_windows(&scaler.transform(&val).unwrap(), 12, 12, 1).unwrap(),
        scaler,
    }
}

fn small_model(nodes: usize, seed: u64) -> RpMixer<f32> {
    let mut c = ModelConfig::new(nodes, 12, 12);
    c.n_block = 2;
    c.seed = seed;
    build_model(&c).unwrap()
}

#[test]
fn scripted_metrics_stop_and_restore() {
    let s = setup(4, 400);
    let metrics = [5.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 1.0];
    let mut snapshots: Vec<RpMixer<f32>> = Vec::new();
    let config = TrainConfig {
        max_epochs: 50,
        ..TrainConfig::default()
    };
    let outcome = fit_with_validator(
        small_model(4, 0),
        &s.train,
        &config,
        &mut |m: &RpMixer<f32>, epoch| {
            snapshots.push(m.clone());
            Ok(metrics[epoch - 1])
        },
        &mut |_| {},
    )
    .unwrap();
    let h = &outcome.history;
    assert_eq!(h.epochs.len(), 9);
    assert!(h.stopped_early);
    assert_eq!(h.best_epoch, Some(2));
    assert_eq!(h.best_val, Some(4.0));
    assert_eq!(outcome.model.tensors(), snapshots[1].tensors());
    let min = h.epochs.iter().map(|r| r.val_mae).fold(f64::INFINITY, f64::min);
    assert_eq!(h.best_val, Some(min));
}

#[test]
fn zero_epochs_returns_initial_model() {
    let s = setup(4, 400);
    let init = small_model(4, 3);
    let config = TrainConfig {
        max_epochs: 0,
        ..TrainConfig::default()
    };
    let outcome = fit(init.clone(), &s.train, &s.val, &s.scaler, &config).unwrap();
    assert!(outcome.history.epochs.is_empty());
    assert_eq!(outcome.history.best_epoch, None);
    assert_eq!(outcome.model.tensors(), init.tensors());
}

#[test]
fn training_loss_decreases_and_runs_are_reproducible() {
    let s = setup(8, 96 * 7);
    let config = TrainConfig {
        max_epochs: 20,
        patience: 100,
        seed: 5,
        ..TrainConfig::default()
    };
    let a = fit(small_model(8, 5), &s.train, &s.val, &s.scaler, &config).unwrap();
    let h = &a.history.epochs;
    assert_eq!(h.len(), 20);
    assert!(h[19].train_loss < h[0].train_loss, "{} vs {}", h[19].train_loss, h[0].train_loss);

    let b = fit(small_model(8, 5), &s.train, &s.val, &s.scaler, &config).unwrap();
    assert_eq!(a.history.to_csv_untimed(), b.history.to_csv_untimed());
    assert_eq!(a.model.tensors(), b.model.tensors());
}

#[test]
fn frozen_projections_are_untouched() {
    let s = setup(8, 400);
    let init = small_model(8, 1);
    let before: Vec<Vec<u32>> = init
        .projection_weights()
        .iter()
        .map(|w| w.data().iter().map(|v| v.to_bits()).collect())
        .collect();
    let config = TrainConfig {
        max_epochs: 3,
        ..TrainConfig::default()
    };
    let outcome = fit(init, &s.train, &s.val, &s.scaler, &config).unwrap();
    let after: Vec<Vec<u32>> = outcome
        .model
        .projection_weights()
        .iter()
        .map(|w| w.data().iter().map(|v| v.to_bits()).collect())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn mse_loss_also_trains() {
    let s = setup(4, 400);
    let config = TrainConfig {
        loss: LossKind::Mse,
        max_epochs: 5,
        patience: 100,
        ..TrainConfig::default()
    };
    let model = LinearForecaster::<f32>::new(12, 12, 0);
    let outcome = fit(model, &s.train, &s.val, &s.scaler, &config).unwrap();
    let h = &outcome.history.epochs;
    assert!(h[4].train_loss < h[0].train_loss);
}

#[test]
fn non_finite_loss_aborts_with_context() {
    let s = setup(4, 400);
    let mut model = LinearForecaster::<f32>::new(12, 12, 0);
    model.visit_params(&mut |p, _| p.fill(f32::MAX));
    let config = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    match fit(model, &s.train, &s.val, &s.scaler, &config) {
        Err(Error::NonFinite { context }) => assert!(context.contains("epoch 1, batch 1"), "{context}"),
        other => panic!("expected non-finite error, got {:?}", other.map(|o| o.history)),
    }
}
