use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{MissingPolicy, SyntheticSpec, SYNTHETIC_SEED_OFFSET};
use crate::error::{Error, Result};
use crate::model::{AblationFlags, ModelConfig};
use crate::training::{AdamWConfig, LossKind, TrainConfig};

/// Everything one run needs, read from and written to a flat `key = value`
/// file where `#` starts a comment.
///
/// Without `dataset` the run uses the synthetic generator configured by the
/// `synthetic.*` keys, seeded with `seed + SYNTHETIC_SEED_OFFSET`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    /// Interval assumed for CSV input, in minutes.
    pub csv_interval_minutes: u32,
    pub missing: MissingPolicy,
    /// Target interval for temporal aggregation; 0 keeps the native interval.
    pub aggregate_minutes: u32,
    pub split: [u32; 3],
    pub t_past: usize,
    pub t_future: usize,
    pub stride: usize,
    pub n_block: usize,
    pub m_neuron: f64,
    pub complex_bias: bool,
    pub flags: AblationFlags,
    pub seed: u64,
    pub loss: LossKind,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub standardize: bool,
    pub mask_zero: bool,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            synthetic: SyntheticSpec::default(),
            csv_interval_minutes: 5,
            missing: MissingPolicy::Reject,
            aggregate_minutes: 0,
            split: [6, 2, 2],
            t_past: 12,
            t_future: 12,
            stride: 1,
            n_block: 8,
            m_neuron: 1.0,
            complex_bias: true,
            flags: AblationFlags::FULL,
            seed: 0,
            loss: LossKind::Mae,
            batch_size: 32,
            lr: 1e-3,
            weight_decay: 0.01,
            max_epochs: 100,
            patience: 7,
            standardize: true,
            mask_zero: true,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("key '{key}': expected true or false, got '{value}'"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("key '{key}' is set twice")));
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Sets one key; unknown keys are an error naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.synthetic;
        match key {
            "dataset" => self.dataset = (!value.is_empty()).then(|| PathBuf::from(value)),
            "csv_interval_minutes" => self.csv_interval_minutes = parse_value(key, value)?,
            "missing" => {
                self.missing = match value {
                    "reject" => MissingPolicy::Reject,
                    "forward_fill" => MissingPolicy::ForwardFill,
                    _ => {
                        return Err(Error::Config(format!(
                            "key '{key}': expected reject or forward_fill, got '{value}'"
                        )))
                    }
                }
            }
            "aggregate_minutes" => self.aggregate_minutes = parse_value(key, value)?,
            "split" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!("key '{key}': expected three ratios like 6,2,2")));
                }
                for (slot, p) in self.split.iter_mut().zip(parts) {
                    *slot = parse_value(key, p)?;
                }
            }
            "t_past" => self.t_past = parse_value(key, value)?,
            "t_future" => self.t_future = parse_value(key, value)?,
            "stride" => self.stride = parse_value(key, value)?,
            "n_block" => self.n_block = parse_value(key, value)?,
            "m_neuron" => self.m_neuron = parse_value(key, value)?,
            "complex_bias" => self.complex_bias = parse_bool(key, value)?,
            "pre_activation" => self.flags.pre_activation = parse_bool(key, value)?,
            "random_projection" => self.flags.random_projection = parse_bool(key, value)?,
            "frequency_domain" => self.flags.frequency_domain = parse_bool(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "loss" => self.loss = value.parse().map_err(|_| Error::Config(format!("key '{key}': expected mae or mse, got '{value}'")))?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "weight_decay" => self.weight_decay = parse_value(key, value)?,
            "max_epochs" => self.max_epochs = parse_value(key, value)?,
            "patience" => self.patience = parse_value(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "mask_zero" => self.mask_zero = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "synthetic.nodes" => s.nodes = parse_value(key, value)?,
            "synthetic.steps" => s.steps = parse_value(key, value)?,
            "synthetic.steps_per_day" => s.steps_per_day = parse_value(key, value)?,
            "synthetic.interval_minutes" => s.interval_minutes = parse_value(key, value)?,
            "synthetic.base_level" => s.base_level = parse_value(key, value)?,
            "synthetic.daily_amplitude_min" => s.daily_amplitude.0 = parse_value(key, value)?,
            "synthetic.daily_amplitude_max" => s.daily_amplitude.1 = parse_value(key, value)?,
            "synthetic.weekly_amplitude_min" => s.weekly_amplitude.0 = parse_value(key, value)?,
            "synthetic.weekly_amplitude_max" => s.weekly_amplitude.1 = parse_value(key, value)?,
            "synthetic.latent_factors" => s.latent_factors = parse_value(key, value)?,
            "synthetic.factor_scale" => s.factor_scale = parse_value(key, value)?,
            "synthetic.factor_persistence" => s.factor_persistence = parse_value(key, value)?,
            "synthetic.max_factor_lag" => s.max_factor_lag = parse_value(key, value)?,
            "synthetic.noise_std" => s.noise_std = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_past", self.t_past),
            ("t_future", self.t_future),
            ("stride", self.stride),
            ("n_block", self.n_block),
            ("batch_size", self.batch_size),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("key '{key}' must be at least 1")));
            }
        }
        if self.split.contains(&0) {
            return Err(Error::Config("key 'split': ratios must be positive".into()));
        }
        if self.csv_interval_minutes == 0 {
            return Err(Error::Config("key 'csv_interval_minutes' must be positive".into()));
        }
        if !(self.m_neuron.is_finite() && self.m_neuron > 0.0) {
            return Err(Error::Config("key 'm_neuron' must be positive".into()));
        }
        self.train_config().optimizer.validate()?;
        self.synthetic.validate()
    }

    /// The synthetic spec with its derived seed.
    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            seed: self.seed.wrapping_add(SYNTHETIC_SEED_OFFSET),
            ..self.synthetic.clone()
        }
    }

    pub fn model_config(&self, nodes: usize, features: usize) -> ModelConfig {
        ModelConfig {
            nodes,
            features,
            t_past: self.t_past,
            t_future: self.t_future,
            n_block: self.n_block,
            m_neuron: self.m_neuron,
            seed: self.seed,
            flags: self.flags,
            complex_bias: self.complex_bias,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            optimizer: AdamWConfig {
                lr: self.lr,
                weight_decay: self.weight_decay,
                ..AdamWConfig::default()
            },
            seed: self.seed,
        }
    }

    /// Every key in a fixed order; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let s = &self.synthetic;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("dataset", self.dataset.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        kv("csv_interval_minutes", self.csv_interval_minutes.to_string());
        kv(
            "missing",
            match self.missing {
                MissingPolicy::Reject => "reject",
                MissingPolicy::ForwardFill => "forward_fill",
            }
            .into(),
        );
        kv("aggregate_minutes", self.aggregate_minutes.to_string());
        kv("split", format!("{},{},{}", self.split[0], self.split[1], self.split[2]));
        kv("t_past", self.t_past.to_string());
        kv("t_future", self.t_future.to_string());
        kv("stride", self.stride.to_string());
        kv("n_block", self.n_block.to_string());
        kv("m_neuron", self.m_neuron.to_string());
        kv("complex_bias", self.complex_bias.to_string());
        kv("pre_activation", self.flags.pre_activation.to_string());
        kv("random_projection", self.flags.random_projection.to_string());
        kv("frequency_domain", self.flags.frequency_domain.to_string());
        kv("seed", self.seed.to_string());
        kv("loss", self.loss.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("lr", self.lr.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("patience", self.patience.to_string());
        kv("standardize", self.standardize.to_string());
        kv("mask_zero", self.mask_zero.to_string());
        kv("out", self.out.display().to_string());
        kv("synthetic.nodes", s.nodes.to_string());
        kv("synthetic.steps", s.steps.to_string());
        kv("synthetic.steps_per_day", s.steps_per_day.to_string());
        kv("synthetic.interval_minutes", s.interval_minutes.to_string());
        kv("synthetic.base_level", s.base_level.to_string());
        kv("synthetic.daily_amplitude_min", s.daily_amplitude.0.to_string());
        kv("synthetic.daily_amplitude_max", s.daily_amplitude.1.to_string());
        kv("synthetic.weekly_amplitude_min", s.weekly_amplitude.0.to_string());
        kv("synthetic.weekly_amplitude_max", s.weekly_amplitude.1.to_string());
        kv("synthetic.latent_factors", s.latent_factors.to_string());
        kv("synthetic.factor_scale", s.factor_scale.to_string());
        kv("synthetic.factor_persistence", s.factor_persistence.to_string());
        kv("synthetic.max_factor_lag", s.max_factor_lag.to_string());
        kv("synthetic.noise_std", s.noise_std.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut c = ExperimentConfig::default();
        c.dataset = Some(PathBuf::from("data/x.rpmx"));
        c.flags = AblationFlags::NO_FREQUENCY_DOMAIN;
        c.lr = 3e-4;
        c.synthetic.daily_amplitude = (1.5, 2.25);
        c.missing = MissingPolicy::ForwardFill;
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = ExperimentConfig::parse("# header\n\nseed = 7 # trailing\n  lr=0.01\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.lr, 0.01);
    }

    #[test]
    fn errors_name_the_key() {
        let err = ExperimentConfig::parse("bogus_key = 1").unwrap_err().to_string();
        assert!(err.contains("bogus_key"), "{err}");
        let err = ExperimentConfig::parse("batch_size = many").unwrap_err().to_string();
        assert!(err.contains("batch_size"), "{err}");
        let err = ExperimentConfig::parse("t_past = 0").unwrap_err().to_string();
        assert!(err.contains("t_past"), "{err}");
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
    }

    #[test]
    fn derived_configs() {
        let c = ExperimentConfig::parse("seed = 4\nbatch_size = 8\nrandom_projection = false").unwrap();
        assert_eq!(c.synthetic_spec().seed, 4 + SYNTHETIC_SEED_OFFSET);
        let m = c.model_config(32, 1);
        assert_eq!((m.nodes, m.seed, m.n_block), (32, 4, 8));
        assert!(!m.flags.random_projection);
        let t = c.train_config();
        assert_eq!((t.batch_size, t.seed, t.patience), (8, 4, 7));
    }
}
