//! Ground-truth solvers used to label datasets and to measure gaps: a dense
//! simplex for the knapsack relaxations and a one-dimensional concave dual
//! search for production planning.

mod simplex;

use serde::{Deserialize, Serialize};

pub use simplex::{solve_lp, LpProblem, LpSolution, LpStatus, RowSense};

use crate::error::{Error, Result};
use crate::problems::{Dataset, Instance, KnapsackInstance, OracleRecord, ProdPlanInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    /// Multipliers of the hard constraints (`y ≤ 0`).
    pub y: Vec<f64>,
    /// Multipliers of the remaining constraints, family-specific layout.
    pub z: Vec<f64>,
    pub iterations: usize,
    /// Primal objective minus dual objective at the returned pair.
    pub primal_dual_gap: f64,
}

impl OracleSolution {
    pub fn record(&self) -> OracleRecord {
        OracleRecord {
            value: self.value,
            y_star: self.y.clone(),
        }
    }
}

/// Knapsack relaxation `min −pᵀx, Wx ≤ b, 0 ≤ x ≤ 1`. The returned `z` is
/// `(zˡ, zᵘ)` concatenated.
pub fn solve_knapsack_lp(inst: &KnapsackInstance) -> Result<OracleSolution> {
    inst.validate()?;
    let lp = LpProblem {
        objective: inst.p.iter().map(|v| -v).collect(),
        constraints: inst.w.clone(),
        senses: vec![RowSense::Le; inst.m],
        rhs: inst.b.clone(),
        lower: vec![0.0; inst.n],
        upper: vec![1.0; inst.n],
    };
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        // x = 0 is always feasible and the box bounds the objective
        return Err(Error::validation(format!(
            "knapsack relaxation reported {:?}",
            sol.status
        )));
    }
    let mut z = Vec::with_capacity(2 * inst.n);
    z.extend(sol.reduced_costs.iter().map(|d| d.max(0.0)));
    z.extend(sol.reduced_costs.iter().map(|d| (-d).max(0.0)));
    Ok(OracleSolution {
        status: LpStatus::Optimal,
        value: sol.objective,
        primal: sol.x,
        y: sol.row_duals,
        z,
        iterations: sol.iterations,
        primal_dual_gap: sol.objective - sol.dual_objective,
    })
}

/// Concave dual function `g(y) = b·y + 2 Σⱼ √(fⱼ(dⱼ − y rⱼ))` for `y ≤ 0`.
pub fn prodplan_dual_value(inst: &ProdPlanInstance, y: f64) -> f64 {
    inst.b * y
        + 2.0
            * (0..inst.n)
                .map(|j| (inst.f[j] * (inst.d[j] - y * inst.r[j])).sqrt())
                .sum::<f64>()
}

/// `g′(y) = b − Σⱼ rⱼ √(fⱼ/(dⱼ − y rⱼ))`, strictly decreasing in `y`.
pub fn prodplan_dual_slope(inst: &ProdPlanInstance, y: f64) -> f64 {
    inst.b
        - (0..inst.n)
            .map(|j| inst.r[j] * (inst.f[j] / (inst.d[j] - y * inst.r[j])).sqrt())
            .sum::<f64>()
}

const BISECTION_MAX_ITERS: usize = 200;
const SLOPE_TOL: f64 = 1e-10;

/// Maximizes the concave dual over `y ≤ 0` by bisection on its slope and
/// recovers the primal `xⱼ = √(fⱼ/(dⱼ − y rⱼ))`, `tⱼ = 1/xⱼ`. The primal
/// vector is `(x, t)`; `z` is `(π, τ, σ)` per item, concatenated.
pub fn solve_prodplan(inst: &ProdPlanInstance) -> Result<OracleSolution> {
    inst.validate()?;
    let mut iterations = 0;
    let y = if prodplan_dual_slope(inst, 0.0) >= 0.0 {
        0.0
    } else {
        let mut lo = -1.0;
        while prodplan_dual_slope(inst, lo) <= 0.0 {
            lo *= 2.0;
            iterations += 1;
            if !lo.is_finite() {
                return Err(Error::validation("could not bracket the dual optimum"));
            }
        }
        let mut hi = 0.0;
        // invariant: slope(lo) > 0 ≥ slope(hi)
        for _ in 0..BISECTION_MAX_ITERS {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = prodplan_dual_slope(inst, mid);
            if s.abs() <= SLOPE_TOL {
                lo = mid;
                break;
            }
            if s > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // the lower end keeps rᵀx ≤ b
        lo
    };

    let n = inst.n;
    let x: Vec<f64> = (0..n)
        .map(|j| (inst.f[j] / (inst.d[j] - y * inst.r[j])).sqrt())
        .collect();
    let t: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let primal_value = inst.primal_objective(&x, &t)?;
    let dual_value = prodplan_dual_value(inst, y);

    let mut z = Vec::with_capacity(3 * n);
    for j in 0..n {
        let pi = inst.d[j] - y * inst.r[j];
        let tau = inst.f[j];
        z.extend([pi, tau, -(2.0 * pi * tau).sqrt()]);
    }
    let mut primal = x;
    primal.extend(t);
    Ok(OracleSolution {
        status: LpStatus::Optimal,
        value: dual_value,
        primal,
        y: vec![y],
        z,
        iterations,
        primal_dual_gap: primal_value - dual_value,
    })
}

pub fn solve_instance(inst: &Instance) -> Result<OracleSolution> {
    match inst {
        Instance::Knapsack(k) => solve_knapsack_lp(k),
        Instance::Prodplan(p) => solve_prodplan(p),
    }
}

/// Solves every instance and caches the optimum in its record.
pub fn attach_oracles(ds: &mut Dataset, jobs: usize) -> Result<()> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot build worker pool: {e}")))?;
    let solved: Vec<Result<OracleRecord>> = pool.install(|| {
        ds.records
            .par_iter()
            .map(|r| solve_instance(&r.instance).map(|s| s.record()))
            .collect()
    });
    for (rec, oracle) in ds.records.iter_mut().zip(solved) {
        rec.oracle = Some(oracle?);
    }
    Ok(())
}

/// `(L* − L̂)/|L*|`.
pub fn optimality_gap(l_star: f64, l_hat: f64) -> Result<f64> {
    if l_star == 0.0 {
        return Err(Error::UndefinedGap);
    }
    Ok((l_star - l_hat) / l_star.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn knapsack_worked_example() {
        let w = DenseMatrix::from_rows(&[vec![2.0, 1.0]]).unwrap();
        let inst = KnapsackInstance::new(vec![3.0, 1.0], w, vec![2.0]).unwrap();
        let sol = solve_knapsack_lp(&inst).unwrap();
        assert!((sol.value + 3.0).abs() < 1e-12);
        assert!((-1.5 - 1e-12..=-1.0 + 1e-12).contains(&sol.y[0]));
        let slack = -3.0 - 2.0 * sol.y[0];
        assert!((sol.z[0] - slack.max(0.0)).abs() < 1e-12);
        assert!((sol.z[2] - (-slack).max(0.0)).abs() < 1e-12);
        assert!(sol.primal_dual_gap.abs() < 1e-12);
    }

    #[test]
    fn knapsack_slack_and_empty_capacity() {
        let w = DenseMatrix::from_rows(&[vec![2.0, 1.0, 4.0]]).unwrap();
        let p = vec![3.0, 1.0, 2.0];
        let slack = KnapsackInstance::new(p.clone(), w.clone(), vec![10.0]).unwrap();
        let sol = solve_knapsack_lp(&slack).unwrap();
        assert!((sol.value + 6.0).abs() < 1e-12);
        assert_eq!(sol.y, vec![0.0]);
        let empty = KnapsackInstance::new(p, w, vec![0.0]).unwrap();
        assert!(solve_knapsack_lp(&empty).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn prodplan_worked_example() {
        let inst = ProdPlanInstance::new(vec![2.0], vec![8.0], vec![1.0], 1.0).unwrap();
        let sol = solve_prodplan(&inst).unwrap();
        assert!((sol.y[0] + 6.0).abs() <= 1e-9, "y = {}", sol.y[0]);
        assert!((sol.value - 10.0).abs() <= 1e-9);
        assert!((sol.primal[0] - 1.0).abs() <= 1e-9);
        assert!(sol.primal_dual_gap.abs() <= 1e-8 * 11.0);
    }

    #[test]
    fn prodplan_slack_resource() {
        // b ≥ Σ rⱼ √(fⱼ/dⱼ) → y* = 0
        let inst = ProdPlanInstance::new(vec![2.0, 1.0], vec![8.0, 4.0], vec![1.0, 1.0], 10.0).unwrap();
        let sol = solve_prodplan(&inst).unwrap();
        assert_eq!(sol.y, vec![0.0]);
        let expect = 2.0 * ((2.0f64 * 8.0).sqrt() + (1.0f64 * 4.0).sqrt());
        assert!((sol.value - expect).abs() < 1e-12);
    }

    #[test]
    fn gaps() {
        assert!((optimality_gap(10.0, 9.9).unwrap() - 0.01).abs() < 1e-15);
        assert!((optimality_gap(-3.0, -3.3).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(optimality_gap(4.0, 4.0).unwrap(), 0.0);
        assert!(matches!(optimality_gap(0.0, 1.0), Err(Error::UndefinedGap)));
    }
}
