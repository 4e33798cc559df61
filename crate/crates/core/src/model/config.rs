use crate::error::{Error, Result};

/// Offset added to the global seed for the stream that initializes trainable
/// weights. Random projection layers use `seed + block_index` instead.
pub const INIT_SEED_OFFSET: u64 = 10_000;

/// The three design toggles examined by the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AblationFlags {
    /// Activations precede the weighted layers so the skip is a pure identity.
    pub pre_activation: bool,
    /// Spatial mixing starts with a frozen random projection.
    pub random_projection: bool,
    /// Temporal mixing happens on the spectrum via a complex linear layer.
    pub frequency_domain: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self::FULL
    }
}

impl AblationFlags {
    pub const FULL: Self = Self {
        pre_activation: true,
        random_projection: true,
        frequency_domain: true,
    };

    pub const POST_ACTIVATION: Self = Self {
        pre_activation: false,
        ..Self::FULL
    };

    pub const NO_RANDOM_PROJECTION: Self = Self {
        random_projection: false,
        ..Self::FULL
    };

    pub const NO_FREQUENCY_DOMAIN: Self = Self {
        frequency_domain: false,
        ..Self::FULL
    };

    /// The ablation variants in reporting order, with their short names.
    pub fn variants() -> [(&'static str, Self); 4] {
        [
            ("full", Self::FULL),
            ("post-activation", Self::POST_ACTIVATION),
            ("no-random-projection", Self::NO_RANDOM_PROJECTION),
            ("no-frequency-domain", Self::NO_FREQUENCY_DOMAIN),
        ]
    }
}

/// Width of the projection layer: `m_neuron·√n` rounded half-up, at least 1.
pub fn projection_width(nodes: usize, m_neuron: f64) -> usize {
    let raw = m_neuron * (nodes as f64).sqrt();
    ((raw + 0.5).floor() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub nodes: usize,
    pub features: usize,
    pub t_past: usize,
    pub t_future: usize,
    pub n_block: usize,
    pub m_neuron: f64,
    pub seed: u64,
    pub flags: AblationFlags,
    pub complex_bias: bool,
}

impl ModelConfig {
    pub fn new(nodes: usize, t_past: usize, t_future: usize) -> Self {
        Self {
            nodes,
            features: 1,
            t_past,
            t_future,
            n_block: 8,
            m_neuron: 1.0,
            seed: 0,
            flags: AblationFlags::FULL,
            complex_bias: true,
        }
    }

    pub fn n_rand(&self) -> usize {
        projection_width(self.nodes, self.m_neuron)
    }

    /// Length of each node's flattened input row, `d·t_past`.
    pub fn input_len(&self) -> usize {
        self.features * self.t_past
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nodes", self.nodes),
            ("features", self.features),
            ("t_past", self.t_past),
            ("t_future", self.t_future),
            ("n_block", self.n_block),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.m_neuron.is_finite() && self.m_neuron > 0.0) {
            return Err(Error::Config(format!(
                "m_neuron must be positive, got {}",
                self.m_neuron
            )));
        }
        Ok(())
    }
}
