use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use dll_core::training::{Method, TrainConfig};
use serde::Deserialize;

/// Training settings that may come from flags or from a JSON file. Unset
/// fields fall through to the next source: flags, then file, then the
/// family defaults.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    /// dll or dc3
    #[arg(long)]
    pub method: Option<Method>,
    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Epochs without improvement before the learning rate is halved
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Epochs before the patience counter starts
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed factor applied to the network head
    #[arg(long)]
    pub output_scale: Option<f64>,
    #[arg(long)]
    pub correction_steps: Option<usize>,
    #[arg(long)]
    pub correction_rate: Option<f64>,
    /// DC3 soft penalty weight
    #[arg(long)]
    pub penalty: Option<f64>,
}

impl TrainOverrides {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields of `self`, falling back to `lower` where unset.
    pub fn or(self, lower: Self) -> Self {
        Self {
            method: self.method.or(lower.method),
            hidden: self.hidden.or(lower.hidden),
            lr: self.lr.or(lower.lr),
            patience: self.patience.or(lower.patience),
            max_epochs: self.max_epochs.or(lower.max_epochs),
            warmup: self.warmup.or(lower.warmup),
            batch_size: self.batch_size.or(lower.batch_size),
            seed: self.seed.or(lower.seed),
            output_scale: self.output_scale.or(lower.output_scale),
            correction_steps: self.correction_steps.or(lower.correction_steps),
            correction_rate: self.correction_rate.or(lower.correction_rate),
            penalty: self.penalty.or(lower.penalty),
        }
    }

    pub fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.method {
            cfg.method = v;
        }
        if let Some(v) = &self.hidden {
            cfg.hidden = v.clone();
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.patience {
            cfg.patience = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.output_scale {
            cfg.output_scale = v;
        }
        if let Some(v) = self.correction_steps {
            cfg.dc3.correction_steps = v;
        }
        if let Some(v) = self.correction_rate {
            cfg.dc3.correction_rate = v;
        }
        if let Some(v) = self.penalty {
            cfg.dc3.penalty = v;
        }
    }

    pub fn method_or_default(&self) -> Method {
        self.method.unwrap_or(Method::Dll)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dll_core::problems::Family;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: TrainOverrides =
            serde_json::from_str(r#"{"lr": 0.01, "patience": 7, "hidden": [16, 16]}"#).unwrap();
        let flags = TrainOverrides {
            lr: Some(0.5),
            ..Default::default()
        };
        let merged = flags.or(file);
        let mut cfg = TrainConfig::for_family(Family::Prodplan, merged.method_or_default(), 1, 4);
        merged.apply(&mut cfg);
        assert_eq!(cfg.lr, 0.5);
        assert_eq!(cfg.patience, 7);
        assert_eq!(cfg.hidden, vec![16, 16]);
        assert_eq!(cfg.max_epochs, 4096);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<TrainOverrides>(r#"{"learning_rate": 1}"#).is_err());
    }
}
