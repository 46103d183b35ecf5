use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dll,
    Dc3,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dll => "dll",
            Method::Dc3 => "dc3",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dll" => Ok(Method::Dll),
            "dc3" => Ok(Method::Dc3),
            other => Err(Error::validation(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dc3Config {
    pub correction_steps: usize,
    pub correction_rate: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub family: Family,
    pub method: Method,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fixed factor applied to the network head, in objective units.
    pub output_scale: f64,
    pub dc3: Dc3Config,
}

impl TrainConfig {
    /// Architecture and schedule used for `family` at size `(m, n)`.
    pub fn for_family(family: Family, method: Method, m: usize, n: usize) -> Self {
        match family {
            Family::Knapsack => Self {
                family,
                method,
                hidden: vec![2 * (m + n); 2],
                lr: 1e-4,
                patience: 32,
                max_epochs: 1024,
                warmup: 0,
                batch_size: 128,
                seed: 0,
                output_scale: 1.0,
                dc3: Dc3Config {
                    correction_steps: 10,
                    correction_rate: 1e-4,
                    penalty: 10.0,
                },
            },
            Family::Prodplan => Self {
                family,
                method,
                hidden: vec![(4 * n).max(128); 2],
                lr: 1e-4,
                patience: 128,
                max_epochs: 4096,
                warmup: 1024,
                batch_size: 128,
                seed: 0,
                output_scale: 100.0,
                dc3: Dc3Config {
                    correction_steps: 10,
                    correction_rate: 1e-5,
                    penalty: 10.0,
                },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::validation("hidden layer sizes must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::validation(
                "patience, max_epochs and batch_size must be positive",
            ));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::validation("output_scale must be positive"));
        }
        if self.method == Method::Dc3 && !(self.dc3.correction_rate > 0.0 && self.dc3.penalty > 0.0) {
            return Err(Error::validation("DC3 correction rate and penalty must be positive"));
        }
        Ok(())
    }
}
