use serde::{Deserialize, Serialize};

use super::rng::SplitMix64;
use super::Feasibility;
use crate::error::{check_len, Error, Result};
use crate::linalg::dot;

/// Resource-constrained production and inventory planning in conic form:
/// `min dᵀx + fᵀt  s.t.  rᵀx ≤ b,  (xⱼ, tⱼ, √2) ∈ 𝒬ᵣ³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProdPlanInstance {
    pub n: usize,
    pub d: Vec<f64>,
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    pub b: f64,
}

const TAG_DEMAND: u64 = 1;
const TAG_HOLDING: u64 = 2;
const TAG_HOLDING_RATE: u64 = 3;
const TAG_ORDER_SCALE: u64 = 4;
const TAG_RESOURCE_SCALE: u64 = 5;
const TAG_BUDGET: u64 = 6;

impl ProdPlanInstance {
    pub fn new(d: Vec<f64>, f: Vec<f64>, r: Vec<f64>, b: f64) -> Result<Self> {
        let inst = Self {
            n: d.len(),
            d,
            f,
            r,
            b,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("production planning needs n >= 1"));
        }
        check_len("prodplan d", self.n, self.d.len())?;
        check_len("prodplan f", self.n, self.f.len())?;
        check_len("prodplan r", self.n, self.r.len())?;
        let pos = |v: &f64| v.is_finite() && *v > 0.0;
        if !(self.d.iter().all(pos) && self.f.iter().all(pos) && self.r.iter().all(pos)) {
            return Err(Error::validation("prodplan d, f, r must be finite and > 0"));
        }
        if !pos(&self.b) {
            return Err(Error::validation("prodplan b must be finite and > 0"));
        }
        Ok(())
    }

    /// `Dⱼ ~ U[1,100]`, `cᵖⱼ ~ U[1,10]`, `cʳⱼ ~ U[0.05,0.2]`,
    /// `cᵒⱼ = αⱼcᵖⱼ` with `αⱼ ~ U[0.1,1.5]`, `rⱼ = βⱼcᵖⱼ` with
    /// `βⱼ ~ U[0.1,2]`, `dⱼ = ½cᵖⱼcʳⱼ`, `fⱼ = cᵒⱼDⱼ`, `b = η Σ rⱼ` with
    /// `η ~ U[0.25,0.75]`.
    pub fn generate(n: usize, seed: u64, index: u64) -> Self {
        let stream = |tag| SplitMix64::for_field(seed, index, tag);
        let (mut s_dem, mut s_cp, mut s_cr, mut s_a, mut s_b) = (
            stream(TAG_DEMAND),
            stream(TAG_HOLDING),
            stream(TAG_HOLDING_RATE),
            stream(TAG_ORDER_SCALE),
            stream(TAG_RESOURCE_SCALE),
        );
        let mut d = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for _ in 0..n {
            let demand = s_dem.uniform_in(1.0, 100.0);
            let cp = s_cp.uniform_in(1.0, 10.0);
            let cr = s_cr.uniform_in(0.05, 0.2);
            let co = s_a.uniform_in(0.1, 1.5) * cp;
            d.push(0.5 * cp * cr);
            f.push(co * demand);
            r.push(s_b.uniform_in(0.1, 2.0) * cp);
        }
        let eta = stream(TAG_BUDGET).uniform_in(0.25, 0.75);
        let b = eta * r.iter().sum::<f64>();
        Self { n, d, f, r, b }
    }

    /// Objective of a primal point `(x, t)`.
    pub fn primal_objective(&self, x: &[f64], t: &[f64]) -> Result<f64> {
        check_len("prodplan x", self.n, x.len())?;
        check_len("prodplan t", self.n, t.len())?;
        Ok(dot(&self.d, x) + dot(&self.f, t))
    }

    pub fn primal_feasible(&self, x: &[f64], t: &[f64], tol: f64) -> Result<Feasibility> {
        check_len("prodplan x", self.n, x.len())?;
        check_len("prodplan t", self.n, t.len())?;
        for j in 0..self.n {
            if x[j] < -tol || t[j] < -tol {
                return Ok(Feasibility::Violated(format!("x[{j}], t[{j}] >= 0")));
            }
            // 2·xⱼ·tⱼ ≥ (√2)²
            if x[j] * t[j] < 1.0 - tol {
                return Ok(Feasibility::Violated(format!("x[{j}]·t[{j}] >= 1")));
            }
        }
        if dot(&self.r, x) > self.b + tol * (1.0 + self.b) {
            return Ok(Feasibility::Violated("resource: rᵀx <= b".into()));
        }
        Ok(Feasibility::Feasible)
    }

    /// Features `(d, f, r, b)`.
    pub fn features(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.n + 1);
        v.extend_from_slice(&self.d);
        v.extend_from_slice(&self.f);
        v.extend_from_slice(&self.r);
        v.push(self.b);
        v
    }
}
