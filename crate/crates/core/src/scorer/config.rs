use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::ScorerError;

/// Shape of the encoder and the biaffine head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    /// Width of the parent/child projections in front of `U`.
    pub biaffine_dim: usize,
    /// Token positions at or beyond this share the last position embedding.
    pub max_positions: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 64,
            layers: 2,
            heads: 2,
            ffn_dim: 128,
            biaffine_dim: 64,
            max_positions: 64,
            dropout: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ScorerError> {
        let positive = [
            ("dim", self.dim),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("biaffine_dim", self.biaffine_dim),
            ("max_positions", self.max_positions),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ScorerError::Config(format!("{name} must be positive")));
            }
        }
        if self.dim % self.heads != 0 {
            return Err(ScorerError::Config(format!(
                "dim {} is not divisible by heads {}",
                self.dim, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ScorerError::Config("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

impl FromStr for Optimizer {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(ScorerError::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub learning_rate: f64,
    pub steps: usize,
    /// Linear warmup from zero; the rate then decays linearly to zero.
    pub warmup_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Probability of replacing a training token by the unknown word.
    pub word_dropout: f64,
    /// Global gradient norm limit; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            learning_rate: 2e-3,
            steps: 1500,
            warmup_steps: 200,
            batch_size: 16,
            seed: 1,
            optimizer: Optimizer::Adam,
            word_dropout: 0.1,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ScorerError> {
        self.model.validate()?;
        if !(self.learning_rate > 0.0) {
            return Err(ScorerError::Config("learning_rate must be positive".into()));
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(ScorerError::Config("steps and batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.word_dropout) {
            return Err(ScorerError::Config("word_dropout must be in [0, 1)".into()));
        }
        if !(self.clip_norm >= 0.0) {
            return Err(ScorerError::Config("clip_norm must be non-negative".into()));
        }
        Ok(())
    }

    /// Learning rate at 0-based `step`.
    pub fn rate_at(&self, step: usize) -> f64 {
        let lr = self.learning_rate;
        if step < self.warmup_steps {
            lr * (step + 1) as f64 / self.warmup_steps as f64
        } else {
            let left = self.steps.saturating_sub(step) as f64;
            let span = self.steps.saturating_sub(self.warmup_steps).max(1) as f64;
            lr * left / span
        }
    }

    /// Applies one `key=value` setting, as found in config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScorerError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ScorerError> {
            v.parse()
                .map_err(|_| ScorerError::Config(format!("bad value {v:?} for {key}")))
        }
        let m = &mut self.model;
        match key {
            "dim" => m.dim = num(key, value)?,
            "layers" => m.layers = num(key, value)?,
            "heads" => m.heads = num(key, value)?,
            "ffn_dim" => m.ffn_dim = num(key, value)?,
            "biaffine_dim" => m.biaffine_dim = num(key, value)?,
            "max_positions" => m.max_positions = num(key, value)?,
            "dropout" => m.dropout = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "warmup_steps" => self.warmup_steps = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "word_dropout" => self.word_dropout = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            _ => return Err(ScorerError::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> BTreeMap<&'static str, String> {
        let m = &self.model;
        BTreeMap::from([
            ("dim", m.dim.to_string()),
            ("layers", m.layers.to_string()),
            ("heads", m.heads.to_string()),
            ("ffn_dim", m.ffn_dim.to_string()),
            ("biaffine_dim", m.biaffine_dim.to_string()),
            ("max_positions", m.max_positions.to_string()),
            ("dropout", m.dropout.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("steps", self.steps.to_string()),
            ("warmup_steps", self.warmup_steps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("word_dropout", self.word_dropout.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
        ])
    }
}
