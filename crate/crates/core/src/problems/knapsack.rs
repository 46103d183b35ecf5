use serde::{Deserialize, Serialize};

use super::rng::SplitMix64;
use super::Feasibility;
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;

/// Continuous relaxation of a multi-dimensional knapsack, in min form:
/// `min −pᵀx  s.t.  Wx ≤ b, 0 ≤ x ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub m: usize,
    pub n: usize,
    pub p: Vec<f64>,
    #[serde(with = "rows")]
    pub w: DenseMatrix,
    pub b: Vec<f64>,
}

const TAG_WEIGHTS: u64 = 1;
const TAG_VALUES: u64 = 2;
/// Capacity as a fraction of each resource's total demand.
pub const TIGHTNESS: f64 = 0.25;

impl KnapsackInstance {
    pub fn new(p: Vec<f64>, w: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        let inst = Self {
            m: w.rows(),
            n: w.cols(),
            p,
            w,
            b,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::validation("knapsack needs m >= 1 and n >= 1"));
        }
        check_len("knapsack W rows", self.m, self.w.rows())?;
        check_len("knapsack W cols", self.n, self.w.cols())?;
        check_len("knapsack p", self.n, self.p.len())?;
        check_len("knapsack b", self.m, self.b.len())?;
        let nonneg = |v: &f64| v.is_finite() && *v >= 0.0;
        if !self.p.iter().all(nonneg) || !self.b.iter().all(nonneg) {
            return Err(Error::validation("knapsack p and b must be finite and >= 0"));
        }
        if !self.w.as_slice().iter().all(nonneg) {
            return Err(Error::validation("knapsack weights must be finite and >= 0"));
        }
        Ok(())
    }

    /// Correlated instance: `W_ij ~ U{1..1000}`, `b_i = round(0.25·Σⱼ W_ij)`,
    /// `p_j = round(Σᵢ W_ij / m + 500·u_j)` with `u_j ~ U[0, 1)`.
    pub fn generate(m: usize, n: usize, seed: u64, index: u64) -> Self {
        let mut rw = SplitMix64::for_field(seed, index, TAG_WEIGHTS);
        let mut w = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                w.set(i, j, rw.int_in(1, 1000) as f64);
            }
        }
        let b = (0..m)
            .map(|i| (TIGHTNESS * w.row(i).iter().sum::<f64>()).round())
            .collect();
        let mut ru = SplitMix64::for_field(seed, index, TAG_VALUES);
        let p = (0..n)
            .map(|j| {
                let col: f64 = (0..m).map(|i| w.get(i, j)).sum();
                (col / m as f64 + 500.0 * ru.uniform()).round()
            })
            .collect();
        Self { m, n, p, w, b }
    }

    pub fn primal_objective(&self, x: &[f64]) -> Result<f64> {
        check_len("knapsack x", self.n, x.len())?;
        Ok(-crate::linalg::dot(&self.p, x))
    }

    pub fn primal_feasible(&self, x: &[f64], tol: f64) -> Result<Feasibility> {
        check_len("knapsack x", self.n, x.len())?;
        for (j, &v) in x.iter().enumerate() {
            if v < -tol {
                return Ok(Feasibility::Violated(format!("x[{j}] >= 0")));
            }
            if v > 1.0 + tol {
                return Ok(Feasibility::Violated(format!("x[{j}] <= 1")));
            }
        }
        let wx = self.w.mul_vec(x);
        for (i, (lhs, rhs)) in wx.iter().zip(&self.b).enumerate() {
            if *lhs > rhs + tol * (1.0 + rhs.abs()) {
                return Ok(Feasibility::Violated(format!("resource {i}: (Wx)_i <= b_i")));
            }
        }
        Ok(Feasibility::Feasible)
    }

    /// Flattened features `(b, p, W row-major)`.
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.m + self.n + self.m * self.n);
        f.extend_from_slice(&self.b);
        f.extend_from_slice(&self.p);
        f.extend_from_slice(self.w.as_slice());
        f
    }
}

pub(crate) mod rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::DenseMatrix;

    pub fn serialize<S: Serializer>(m: &DenseMatrix, s: S) -> Result<S::Ok, S::Error> {
        m.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DenseMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        DenseMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
