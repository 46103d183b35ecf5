//! Instance families, seeded generators, primal evaluators and JSONL
//! datasets.

mod dataset;
mod knapsack;
mod prodplan;
pub mod rng;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, OracleRecord, Record, SCHEMA_TAG};
pub use knapsack::KnapsackInstance;
pub use prodplan::ProdPlanInstance;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    /// Names the first violated constraint.
    Violated(String),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Knapsack,
    Prodplan,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Knapsack => "knapsack",
            Family::Prodplan => "prodplan",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knapsack" => Ok(Family::Knapsack),
            "prodplan" => Ok(Family::Prodplan),
            other => Err(Error::validation(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

/// Sizes of the train/validation/test partitions, assigned by index in that
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const DESK: SplitSizes = SplitSizes {
        train: 2048,
        validation: 512,
        test: 512,
    };
    pub const FULL: SplitSizes = SplitSizes {
        train: 8192,
        validation: 4096,
        test: 4096,
    };

    pub fn new(train: usize, validation: usize, test: usize) -> Self {
        Self {
            train,
            validation,
            test,
        }
    }

    /// 4:1:1 partition of `count`, remainder to the training split.
    pub fn from_count(count: usize) -> Self {
        let validation = count / 6;
        let test = count / 6;
        Self {
            train: count - validation - test,
            validation,
            test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    pub fn split_of(&self, index: usize) -> Split {
        if index < self.train {
            Split::Train
        } else if index < self.train + self.validation {
            Split::Validation
        } else {
            Split::Test
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Instance {
    Knapsack(KnapsackInstance),
    Prodplan(ProdPlanInstance),
}

impl Instance {
    pub fn family(&self) -> Family {
        match self {
            Instance::Knapsack(_) => Family::Knapsack,
            Instance::Prodplan(_) => Family::Prodplan,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Knapsack(k) => k.validate(),
            Instance::Prodplan(p) => p.validate(),
        }
    }

    /// `(m, n)`; production planning has a single resource.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Instance::Knapsack(k) => (k.m, k.n),
            Instance::Prodplan(p) => (1, p.n),
        }
    }

    pub fn features(&self) -> Vec<f64> {
        match self {
            Instance::Knapsack(k) => k.features(),
            Instance::Prodplan(p) => p.features(),
        }
    }
}

fn generate_with(
    family: Family,
    sizes: SplitSizes,
    seed: u64,
    jobs: usize,
    make: impl Fn(u64) -> Instance + Sync,
) -> Result<Dataset> {
    let count = sizes.total();
    if count == 0 {
        return Err(Error::validation("dataset must contain at least one instance"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot build worker pool: {e}")))?;
    let instances: Vec<Instance> = pool.install(|| {
        use rayon::prelude::*;
        (0..count as u64).into_par_iter().map(&make).collect()
    });
    let records = instances
        .into_iter()
        .enumerate()
        .map(|(i, instance)| Record {
            index: i,
            seed,
            split: sizes.split_of(i),
            instance,
            oracle: None,
        })
        .collect();
    Ok(Dataset { family, records })
}

/// Generates `sizes.total()` knapsack instances. Oracle values are attached
/// separately (see [`crate::refsolve::attach_oracles`]).
pub fn gen_knapsack(m: usize, n: usize, sizes: SplitSizes, seed: u64, jobs: usize) -> Result<Dataset> {
    if m == 0 || n == 0 {
        return Err(Error::validation("knapsack generation needs m >= 1 and n >= 1"));
    }
    generate_with(Family::Knapsack, sizes, seed, jobs, |i| {
        Instance::Knapsack(KnapsackInstance::generate(m, n, seed, i))
    })
}

pub fn gen_prodplan(n: usize, sizes: SplitSizes, seed: u64, jobs: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::validation("prodplan generation needs n >= 1"));
    }
    generate_with(Family::Prodplan, sizes, seed, jobs, |i| {
        Instance::Prodplan(ProdPlanInstance::generate(n, seed, i))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_partition_pool() {
        let sizes = SplitSizes::new(5, 2, 3);
        let ds = gen_prodplan(4, sizes, 1, 1).unwrap();
        assert_eq!(ds.records.len(), 10);
        assert_eq!(ds.split(Split::Train).count(), 5);
        assert_eq!(ds.split(Split::Validation).count(), 2);
        assert_eq!(ds.split(Split::Test).count(), 3);
    }

    #[test]
    fn from_count_ratio() {
        assert_eq!(SplitSizes::from_count(3072), SplitSizes::DESK);
        let s = SplitSizes::from_count(128);
        assert_eq!(s.total(), 128);
    }

    #[test]
    fn parallel_generation_matches_serial() {
        let sizes = SplitSizes::from_count(30);
        let a = gen_knapsack(2, 6, sizes, 3, 1).unwrap();
        let b = gen_knapsack(2, 6, sizes, 3, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_count_rejected() {
        assert!(gen_prodplan(3, SplitSizes::new(0, 0, 0), 1, 1).is_err());
        assert!(gen_knapsack(0, 3, SplitSizes::from_count(6), 1, 1).is_err());
    }
}
