use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Method, TrainConfig};
use crate::error::{check_len, Error, Result};
use crate::neural::{Mlp, MlpCheckpoint};
use crate::problems::{Family, Instance};

/// Per-feature min-max scaling to `[0, 1]` fitted on the training split.
/// Constant features are shifted but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub range: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut it = features.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::validation("cannot fit a normalizer on no data"))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for f in it {
            check_len("feature vector", min.len(), f.len())?;
            for (k, &v) in f.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        let range = min
            .iter()
            .zip(&max)
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        Ok(Self { min, range })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            min: vec![0.0; dim],
            range: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply_into(&self, raw: &[f64], out: &mut Vec<f64>) -> Result<()> {
        check_len("feature vector", self.dim(), raw.len())?;
        out.extend(
            raw.iter()
                .zip(self.min.iter().zip(&self.range))
                .map(|(v, (lo, r))| (v - lo) / r),
        );
        Ok(())
    }
}

pub const MODEL_FORMAT: &str = "dll-model/v1";

/// A trained predictor: network, input normalization and the settings
/// needed to turn its output into multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub family: Family,
    pub method: Method,
    pub m: usize,
    pub n: usize,
    pub config: TrainConfig,
    pub normalizer: Normalizer,
    pub network: MlpCheckpoint,
}

impl TrainedModel {
    pub fn new(config: &TrainConfig, m: usize, n: usize, normalizer: Normalizer, net: &Mlp) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            family: config.family,
            method: config.method,
            m,
            n,
            config: config.clone(),
            normalizer,
            network: MlpCheckpoint::new(net, None, None),
        }
    }

    pub fn mlp(&self) -> Result<Mlp> {
        if self.format != MODEL_FORMAT {
            return Err(Error::validation(format!(
                "unsupported model format '{}', expected '{MODEL_FORMAT}'",
                self.format
            )));
        }
        let net = self.network.model()?;
        check_len("network input", self.normalizer.dim(), net.input_dim())?;
        Ok(net)
    }

    /// Fails unless `inst` has this model's family and size.
    pub fn check_instance(&self, inst: &Instance) -> Result<()> {
        if inst.family() != self.family {
            return Err(Error::validation(format!(
                "model was trained for {} but the instance is {}",
                self.family,
                inst.family()
            )));
        }
        let (m, n) = inst.dims();
        if (m, n) != (self.m, self.n) {
            return Err(Error::validation(format!(
                "model was trained for m={}, n={} but the instance has m={m}, n={n}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        model.mlp()?;
        Ok(model)
    }
}
