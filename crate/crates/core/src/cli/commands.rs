use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::checkpoint::Checkpoint;
use super::config::ExperimentConfig;
use crate::data::{
    aggregate, chronological_split, load_dataset, make_windows, save_binary, synthetic_generate, CsvOptions,
    RawSeries, WindowedDataset,
};
use crate::error::{Error, Result};
use crate::eval::{
    baseline_linear, correlation_error_diagram, evaluate_forecaster, evaluate_predictions, historical_last_dataset,
    horizon_table, jl_check, metrics_csv, metrics_csv_per_step, BaselineKind, MetricReport, NearestNeighbor,
    TableRow,
};
use crate::model::{build_model, AblationFlags, Forecaster, RpMixer};
use crate::training::{fit_observed, History, Standardizer};

/// Batch size used for inference-only passes.
const EVAL_BATCH: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    #[default]
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Usage(format!("unknown split '{other}', expected train, val or test"))),
        }
    }
}

/// Options shared by every subcommand after flag parsing.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub split: Split,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub baseline: Option<BaselineKind>,
}

impl Options {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(self.apply(config))
    }

    fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(d) = &self.dataset {
            config.dataset = Some(d.clone());
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(o) = &self.out {
            config.out = o.clone();
        }
        config
    }
}

/// Standardized windows for all three splits plus the statistics used.
pub struct Prepared {
    pub raw: RawSeries,
    pub scaler: Standardizer,
    /// Training split after scaling, the 1NN search corpus.
    pub train_series: RawSeries,
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

impl Prepared {
    pub fn split(&self, split: Split) -> &WindowedDataset {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn load_raw(config: &ExperimentConfig) -> Result<RawSeries> {
    let raw = match &config.dataset {
        Some(path) => {
            if !path.exists() {
                return Err(Error::Usage(format!("dataset not found: {}", path.display())));
            }
            let options = CsvOptions {
                interval_minutes: config.csv_interval_minutes,
                start_timestamp: 0,
                missing: config.missing,
            };
            load_dataset(path, &options)?
        }
        None => synthetic_generate(&config.synthetic_spec())?,
    };
    if config.aggregate_minutes > 0 {
        aggregate(&raw, config.aggregate_minutes)
    } else {
        Ok(raw)
    }
}

/// Loads, splits and standardizes with training statistics only, then windows
/// each split independently.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    prepare_series(config, load_raw(config)?)
}

/// As [`prepare`] for a series already in memory.
pub fn prepare_series(config: &ExperimentConfig, raw: RawSeries) -> Result<Prepared> {
    let (train, val, test) = chronological_split(&raw, config.split)?;
    let scaler = if config.standardize {
        Standardizer::fit(&train)?
    } else {
        Standardizer::identity(raw.nodes(), raw.features())
    };
    let window = |s: &RawSeries| make_windows(s, config.t_past, config.t_future, config.stride);
    let train_series = scaler.transform(&train)?;
    Ok(Prepared {
        train: window(&train_series)?,
        val: window(&scaler.transform(&val)?)?,
        test: window(&scaler.transform(&test)?)?,
        train_series,
        scaler,
        raw,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn timing_csv(history: &History) -> String {
    let mut out = String::from("epoch,seconds\n");
    for r in &history.epochs {
        let _ = writeln!(out, "{},{:.6}", r.epoch, r.seconds);
    }
    out
}

/// Mean lag-one-day autocorrelation over nodes (feature 0).
fn daily_autocorrelation(raw: &RawSeries, period: usize) -> Option<f64> {
    if raw.steps() <= period + 1 {
        return None;
    }
    let mut total = 0.0;
    let mut count = 0;
    for node in 0..raw.nodes() {
        let row: Vec<f64> = raw.row(node, 0).iter().map(|&v| v as f64).collect();
        if let Some(r) = crate::eval::pearson(&row[..row.len() - period], &row[period..]) {
            total += r;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

pub fn cmd_generate(opts: &Options) -> Result<String> {
    let config = opts.resolve()?;
    let spec = config.synthetic_spec();
    let raw = synthetic_generate(&spec)?;
    ensure_dir(&config.out)?;
    let path = opts.dataset.clone().unwrap_or_else(|| config.out.join("dataset.rpmx"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_binary(&raw, &path)?;
    let acf = daily_autocorrelation(&raw, spec.steps_per_day);
    let mut summary = String::new();
    let _ = writeln!(summary, "dataset = {}", path.display());
    let _ = writeln!(summary, "nodes = {}", raw.nodes());
    let _ = writeln!(summary, "features = {}", raw.features());
    let _ = writeln!(summary, "steps = {}", raw.steps());
    let _ = writeln!(summary, "interval_minutes = {}", raw.interval_minutes);
    let _ = writeln!(
        summary,
        "daily_autocorrelation = {}",
        acf.map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"))
    );
    write(&config.out.join("generate_summary.txt"), &summary)?;
    Ok(summary)
}

struct TrainedRun {
    model: RpMixer<f32>,
    history: History,
    report: MetricReport,
}

/// Trains one model and writes its checkpoint, history and config to `dir`.
fn train_into(config: &ExperimentConfig, data: &Prepared, dir: &Path, split: Split, log: bool) -> Result<TrainedRun> {
    ensure_dir(dir)?;
    config.save(dir.join("config.cfg"))?;
    let model = build_model::<f32>(&config.model_config(data.raw.nodes(), data.raw.features()))?;
    let outcome = fit_observed(
        model,
        &data.train,
        &data.val,
        &data.scaler,
        &config.train_config(),
        &mut |r| {
            if log {
                eprintln!(
                    "epoch {:>3}  train_loss {:.6}  val_mae {:.6}  ({:.2}s)",
                    r.epoch, r.train_loss, r.val_mae, r.seconds
                );
            }
        },
    )?;
    let ck = Checkpoint::from_model(config, &outcome.model, Some(&outcome.optimizer), outcome.history.best_val);
    ck.save(dir.join("checkpoint.rpck"))?;
    write(&dir.join("history.csv"), &outcome.history.to_csv_untimed())?;
    write(&dir.join("timing.csv"), &timing_csv(&outcome.history))?;
    let report = evaluate_forecaster(
        &outcome.model,
        data.split(split),
        &data.scaler,
        EVAL_BATCH,
        config.mask_zero,
    )?;
    Ok(TrainedRun {
        model: outcome.model,
        history: outcome.history,
        report,
    })
}

pub fn cmd_train(opts: &Options) -> Result<String> {
    let config = opts.resolve()?;
    let data = prepare(&config)?;
    let run = train_into(&config, &data, &config.out, Split::Val, true)?;
    let mut out = String::new();
    let _ = writeln!(out, "epochs run = {}", run.history.epochs.len());
    if let (Some(epoch), Some(val)) = (run.history.best_epoch, run.history.best_val) {
        let _ = writeln!(out, "best epoch = {epoch}");
        let _ = writeln!(out, "best val MAE = {val}");
    }
    let avg = run.report.average();
    let _ = writeln!(out, "val MAE = {}  RMSE = {}  MAPE = {}%", avg.mae, avg.rmse, avg.mape);
    let _ = writeln!(out, "parameters = {}", run.model.num_params());
    let _ = writeln!(out, "checkpoint = {}", config.out.join("checkpoint.rpck").display());
    Ok(out)
}

fn check_dims(ck: &Checkpoint, raw: &RawSeries) -> Result<()> {
    if ck.nodes != raw.nodes() || ck.features != raw.features() {
        return Err(Error::dim(
            "evaluate",
            format!(
                "checkpoint expects {} nodes × {} features, dataset has {} nodes × {} features",
                ck.nodes,
                ck.features,
                raw.nodes(),
                raw.features()
            ),
        ));
    }
    Ok(())
}

fn emit_summary(rows: Vec<TableRow>, out_dir: &Path) -> Result<String> {
    ensure_dir(out_dir)?;
    write(&out_dir.join("metrics.csv"), &metrics_csv(&rows))?;
    Ok(horizon_table(rows)?.to_markdown())
}

fn baseline_row(kind: BaselineKind, config: &ExperimentConfig, data: &Prepared, split: Split) -> Result<TableRow> {
    let target = data.split(split);
    let (report, params) = match kind {
        BaselineKind::HistoricalLast => (
            evaluate_predictions(&historical_last_dataset(target)?, target, &data.scaler, config.mask_zero)?,
            None,
        ),
        BaselineKind::Linear => {
            let outcome = baseline_linear(&data.train, &data.val, &data.scaler, &config.train_config())?;
            let report = evaluate_forecaster(&outcome.model, target, &data.scaler, EVAL_BATCH, config.mask_zero)?;
            (report, Some(outcome.model.num_params()))
        }
        BaselineKind::NearestNeighbor => {
            let nn = NearestNeighbor::fit(&data.train_series, config.t_past, config.t_future)?;
            (
                evaluate_predictions(&nn.predict_dataset(target)?, target, &data.scaler, config.mask_zero)?,
                None,
            )
        }
    };
    Ok(TableRow::new(kind.to_string(), params, report))
}

pub fn cmd_evaluate(opts: &Options) -> Result<String> {
    if let Some(kind) = opts.baseline {
        if kind != BaselineKind::HistoricalLast {
            return Err(Error::Usage(format!(
                "evaluate only runs the hl baseline without a checkpoint; use `baseline --baseline {kind}`"
            )));
        }
        return cmd_baseline(opts);
    }
    let path = opts
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Usage("evaluate needs --checkpoint PATH (or --baseline hl)".into()))?;
    if !path.exists() {
        return Err(Error::Usage(format!("checkpoint not found: {}", path.display())));
    }
    let ck = Checkpoint::load(path)?;
    let config = opts.apply(ck.config.clone());
    let data = prepare(&config)?;
    check_dims(&ck, &data.raw)?;
    let model = ck.model()?;
    let report = evaluate_forecaster(&model, data.split(opts.split), &data.scaler, EVAL_BATCH, config.mask_zero)?;
    emit_summary(vec![TableRow::new("rpmixer", Some(model.num_params()), report)], &config.out)
}

pub fn cmd_baseline(opts: &Options) -> Result<String> {
    let kind = opts
        .baseline
        .ok_or_else(|| Error::Usage("baseline needs --baseline {hl,linear,1nn}".into()))?;
    let config = opts.resolve()?;
    let data = prepare(&config)?;
    let row = baseline_row(kind, &config, &data, opts.split)?;
    emit_summary(vec![row], &config.out)
}

pub fn cmd_ablate(opts: &Options) -> Result<String> {
    let base = opts.resolve()?;
    let data = prepare(&base)?;
    let mut rows = Vec::new();
    for (name, flags) in AblationFlags::variants() {
        let config = ExperimentConfig { flags, ..base.clone() };
        let run = train_into(&config, &data, &base.out.join(name), Split::Test, false)?;
        eprintln!(
            "{name}: {} epochs, test avg MAE {:.4}",
            run.history.epochs.len(),
            run.report.average().mae
        );
        rows.push(TableRow::new(name, Some(run.model.num_params()), run.report));
    }
    ensure_dir(&base.out)?;
    write(&base.out.join("metrics.csv"), &metrics_csv_per_step(&rows))?;
    Ok(horizon_table(rows)?.to_markdown())
}

pub fn cmd_diagnose(opts: &Options) -> Result<String> {
    let path = opts
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Usage("diagnose needs --checkpoint PATH".into()))?;
    if !path.exists() {
        return Err(Error::Usage(format!("checkpoint not found: {}", path.display())));
    }
    let ck = Checkpoint::load(path)?;
    if !ck.config.flags.pre_activation {
        return Err(Error::Unsupported(
            "this checkpoint uses post-activation blocks: without identity skips the output does not \
             unravel into per-block terms, so the decomposition and correlation-error diagram are undefined"
                .into(),
        ));
    }
    let config = opts.apply(ck.config.clone());
    let data = prepare(&config)?;
    check_dims(&ck, &data.raw)?;
    let model = ck.model()?;
    let diagram = correlation_error_diagram(
        &model,
        data.split(opts.split),
        &data.scaler,
        EVAL_BATCH,
        config.mask_zero,
    )?;
    let n = data.raw.nodes();
    let n_rand = model.config().n_rand();
    let jl = jl_check(n, n_rand, 100, config.seed)?;
    ensure_dir(&config.out)?;
    write(&config.out.join("corr_error.csv"), &diagram.to_csv())?;
    write(&config.out.join("jl.csv"), &jl.to_csv())?;

    let mut report = String::new();
    let _ = writeln!(report, "blocks = {}", model.blocks.len());
    let _ = writeln!(report, "pairs = {}", diagram.points.len());
    let _ = writeln!(report, "max_relative_decomposition_residual = {:e}", diagram.max_relative_residual);
    let _ = writeln!(report, "decomposition_ok = {}", diagram.max_relative_residual < 1e-4);
    for (i, r) in diagram.learners.iter().enumerate() {
        let a = r.average();
        let _ = writeln!(report, "learner {} avg MAE = {} RMSE = {} MAPE = {}%", i + 1, a.mae, a.rmse, a.mape);
    }
    let _ = writeln!(report, "learner_mae_range = {}", diagram.mae_range());
    let undefined = diagram.points.iter().filter(|p| p.pearson.is_none()).count();
    let _ = writeln!(report, "undefined_correlations = {undefined}");
    let _ = writeln!(
        report,
        "jl n = {n} n_rand = {n_rand} median = {} iqr = {}",
        jl.median,
        jl.iqr()
    );
    if let Some(w) = &jl.warning {
        let _ = writeln!(report, "jl warning: {w}");
    }
    write(&config.out.join("decomposition.txt"), &report)?;
    Ok(report)
}
