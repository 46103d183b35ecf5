//! Dense bounded-variable revised simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  aᵢᵀx {≤,=,≥} bᵢ,  l ≤ x ≤ u` with finite lower
//! bounds and possibly infinite upper bounds. Each row gets a slack column
//! (`+s` for `≤`, `−s` for `≥`, fixed at zero for `=`); rows whose slack
//! cannot start basic and feasible get an artificial column for phase one.
//! The basis inverse is kept explicitly and rebuilt from scratch every
//! [`REFACTOR_EVERY`] pivots.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, DenseMatrix, LuFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: DenseMatrix,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.constraints.rows(), self.constraints.cols());
        check_len("LP objective", n, self.objective.len())?;
        check_len("LP senses", m, self.senses.len())?;
        check_len("LP rhs", m, self.rhs.len())?;
        check_len("LP lower bounds", n, self.lower.len())?;
        check_len("LP upper bounds", n, self.upper.len())?;
        if self.objective.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(Error::validation("LP objective and rhs must be finite"));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() {
                return Err(Error::validation(format!(
                    "LP variable {j} needs a finite lower bound"
                )));
            }
            if u.is_nan() || u < l {
                return Err(Error::validation(format!("LP variable {j} has upper < lower")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row multipliers `π` with `c − Aᵀπ = d`.
    pub row_duals: Vec<f64>,
    /// Reduced costs `d` of the structural columns.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// `πᵀb + Σ max(dⱼ,0)·lⱼ − Σ max(−dⱼ,0)·uⱼ`, ignoring reduced costs
    /// within roundoff of zero.
    pub dual_objective: f64,
    pub iterations: usize,
}

const REFACTOR_EVERY: usize = 64;
const MAX_ITERATIONS: usize = 200_000;
const COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-10;
const RATIO_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    /// Column-major `m × ncols` constraint matrix including slacks and
    /// artificials.
    cols: Vec<f64>,
    ncols: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
}

impl Tableau {
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// `B⁻¹ a_j`
    fn ftran(&self, j: usize) -> Vec<f64> {
        let a = self.col(j);
        let m = self.m;
        let mut out = vec![0.0; m];
        for (k, ak) in a.iter().enumerate() {
            if *ak != 0.0 {
                for i in 0..m {
                    out[i] += self.binv[i * m + k] * ak;
                }
            }
        }
        out
    }

    /// `π = c_Bᵀ B⁻¹`
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (k, &bk) in self.basis.iter().enumerate() {
            let cb = cost[bk];
            if cb != 0.0 {
                for i in 0..m {
                    pi[i] += cb * self.binv[k * m + i];
                }
            }
        }
        pi
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = DenseMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                b.set(i, k, self.cols[j * m + i]);
            }
        }
        let lu = LuFactors::new(&b)?;
        let mut e = vec![0.0; m];
        for i in 0..m {
            e.fill(0.0);
            e[i] = 1.0;
            let col = lu.solve(&e)?;
            for k in 0..m {
                self.binv[k * m + i] = col[k];
            }
        }
        // recompute basic values from nonbasic ones
        let mut r = self.rhs.clone();
        for j in 0..self.ncols {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (ri, aij) in r.iter_mut().zip(self.col(j)) {
                    *ri -= aij * xj;
                }
            }
        }
        for k in 0..m {
            let v: f64 = (0..m).map(|i| self.binv[k * m + i] * r[i]).sum();
            self.x[self.basis[k]] = v;
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Runs primal simplex on `cost` until optimal or unbounded.
    fn optimize(&mut self, cost: &[f64]) -> Result<LpStatus> {
        let m = self.m;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::validation("simplex iteration limit reached"));
            }
            let pi = self.duals(cost);
            // Bland: lowest-index improving column
            let mut entering = None;
            for j in 0..self.ncols {
                let st = self.status[j];
                if st == Status::Basic || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let d = cost[j] - dot(&pi, self.col(j));
                if (st == Status::AtLower && d < -COST_TOL) || (st == Status::AtUpper && d > COST_TOL) {
                    entering = Some((j, if st == Status::AtLower { 1.0 } else { -1.0 }));
                    break;
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(LpStatus::Optimal);
            };
            self.iterations += 1;

            let alpha = self.ftran(q);
            let mut step = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, Status)> = None;
            for (k, &a) in alpha.iter().enumerate() {
                let da = dir * a;
                let b = self.basis[k];
                let (limit, bound) = if da > PIVOT_TOL {
                    ((self.x[b] - self.lower[b]).max(0.0) / da, Status::AtLower)
                } else if da < -PIVOT_TOL && self.upper[b].is_finite() {
                    ((self.upper[b] - self.x[b]).max(0.0) / -da, Status::AtUpper)
                } else {
                    continue;
                };
                let tie = step.is_finite()
                    && (limit - step).abs() <= RATIO_TIE_TOL * (1.0 + step.abs());
                let better = match leave {
                    None => limit < step && !tie,
                    Some((kk, _)) => (limit < step && !tie) || (tie && b < self.basis[kk]),
                };
                if better {
                    step = limit;
                    leave = Some((k, bound));
                }
            }
            if !step.is_finite() {
                return Ok(LpStatus::Unbounded);
            }

            // move along the edge
            self.x[q] += dir * step;
            for (k, &a) in alpha.iter().enumerate() {
                let b = self.basis[k];
                self.x[b] -= dir * step * a;
            }

            match leave {
                None => {
                    // bound flip
                    self.status[q] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.status[out] = bound;
                    self.x[out] = if bound == Status::AtLower {
                        self.lower[out]
                    } else {
                        self.upper[out]
                    };
                    self.status[q] = Status::Basic;
                    self.basis[r] = q;
                    let piv = alpha[r];
                    for i in 0..m {
                        self.binv[r * m + i] /= piv;
                    }
                    for k in 0..m {
                        if k != r && alpha[k] != 0.0 {
                            let f = alpha[k];
                            for i in 0..m {
                                self.binv[k * m + i] -= f * self.binv[r * m + i];
                            }
                        }
                    }
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }
}

/// Solves the LP; infeasible and unbounded problems are reported through
/// [`LpSolution::status`].
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution> {
    lp.validate()?;
    let (m, n) = (lp.constraints.rows(), lp.constraints.cols());

    // structural columns start at their lower bound
    let mut x0: Vec<f64> = lp.lower.clone();
    let residual: Vec<f64> = (0..m)
        .map(|i| lp.rhs[i] - dot(lp.constraints.row(i), &x0))
        .collect();

    let mut cols = Vec::with_capacity((n + 2 * m) * m);
    for j in 0..n {
        for i in 0..m {
            cols.push(lp.constraints.get(i, j));
        }
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut status = vec![Status::AtLower; n];
    let mut basis = vec![usize::MAX; m];
    let mut binv = vec![0.0; m * m];

    // slacks
    for i in 0..m {
        let sign = match lp.senses[i] {
            RowSense::Le => 1.0,
            RowSense::Ge => -1.0,
            RowSense::Eq => 1.0,
        };
        for k in 0..m {
            cols.push(if k == i { sign } else { 0.0 });
        }
        lower.push(0.0);
        upper.push(if lp.senses[i] == RowSense::Eq { 0.0 } else { f64::INFINITY });
        let value = sign * residual[i];
        if lp.senses[i] != RowSense::Eq && value >= 0.0 {
            basis[i] = n + i;
            binv[i * m + i] = sign;
            status.push(Status::Basic);
            x0.push(value);
        } else {
            status.push(Status::AtLower);
            x0.push(0.0);
        }
    }

    // artificials for rows without a feasible starting slack
    let mut artificials = Vec::new();
    for i in 0..m {
        if basis[i] != usize::MAX {
            continue;
        }
        let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
        let j = lower.len();
        for k in 0..m {
            cols.push(if k == i { sign } else { 0.0 });
        }
        lower.push(0.0);
        upper.push(f64::INFINITY);
        status.push(Status::Basic);
        x0.push(residual[i].abs());
        basis[i] = j;
        binv[i * m + i] = sign;
        artificials.push(j);
    }
    let ncols = lower.len();

    let mut t = Tableau {
        m,
        cols,
        ncols,
        lower,
        upper,
        rhs: lp.rhs.clone(),
        x: x0,
        status,
        basis,
        binv,
        pivots_since_refactor: 0,
        iterations: 0,
    };

    let scale = 1.0 + lp.rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if !artificials.is_empty() {
        let mut phase1 = vec![0.0; ncols];
        for &j in &artificials {
            phase1[j] = 1.0;
        }
        t.optimize(&phase1)?;
        t.refactor()?;
        let infeas: f64 = artificials.iter().map(|&j| t.x[j]).sum();
        if infeas > 1e-9 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: t.x[..n].to_vec(),
                row_duals: vec![0.0; m],
                reduced_costs: vec![0.0; n],
                objective: f64::NAN,
                dual_objective: f64::NAN,
                iterations: t.iterations,
            });
        }
        for &j in &artificials {
            t.upper[j] = 0.0;
            if t.status[j] != Status::Basic {
                t.status[j] = Status::AtLower;
            }
            t.x[j] = 0.0;
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective);
    let status = t.optimize(&cost)?;
    t.refactor()?;

    let pi = t.duals(&cost);
    let reduced_costs: Vec<f64> = (0..n).map(|j| cost[j] - dot(&pi, t.col(j))).collect();
    let x: Vec<f64> = t.x[..n].to_vec();
    let objective = dot(&lp.objective, &x);
    let mut dual_objective = dot(&pi, &lp.rhs);
    for j in 0..n {
        let d = reduced_costs[j];
        if d > COST_TOL {
            dual_objective += d * lp.lower[j];
        } else if d < -COST_TOL {
            dual_objective += d * lp.upper[j];
        }
    }
    Ok(LpSolution {
        status,
        x,
        row_duals: pi,
        reduced_costs,
        objective,
        dual_objective,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        c: Vec<f64>,
        rows: &[Vec<f64>],
        senses: Vec<RowSense>,
        b: Vec<f64>,
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> LpProblem {
        LpProblem {
            objective: c,
            constraints: if rows.is_empty() {
                DenseMatrix::zeros(0, l.len())
            } else {
                DenseMatrix::from_rows(rows).unwrap()
            },
            senses,
            rhs: b,
            lower: l,
            upper: u,
        }
    }

    #[test]
    fn two_variable_knapsack() {
        // max 3x1 + x2 s.t. 2x1 + x2 <= 2, x in [0,1]^2
        let sol = solve_lp(&lp(
            vec![-3.0, -1.0],
            &[vec![2.0, 1.0]],
            vec![RowSense::Le],
            vec![2.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
        assert!((sol.dual_objective - sol.objective).abs() < 1e-12);
        // degenerate vertex: any y in [-1.5, -1] is dual optimal
        assert!((-1.5 - 1e-12..=-1.0 + 1e-12).contains(&sol.row_duals[0]));
    }

    #[test]
    fn box_only_goes_to_corner() {
        let sol = solve_lp(&lp(
            vec![1.0, -2.0, 0.5],
            &[],
            vec![],
            vec![],
            vec![-1.0, 0.0, 2.0],
            vec![3.0, 4.0, 5.0],
        ))
        .unwrap();
        assert_eq!(sol.x, vec![-1.0, 4.0, 2.0]);
        assert!((sol.objective - (-1.0 - 8.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x1 + x2 s.t. x1 + 2x2 = 4, x1 - x2 >= -1, x >= 0
        let sol = solve_lp(&lp(
            vec![1.0, 1.0],
            &[vec![1.0, 2.0], vec![1.0, -1.0]],
            vec![RowSense::Eq, RowSense::Ge],
            vec![4.0, -1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // x1 = 2/3, x2 = 5/3
        assert!((sol.objective - 7.0 / 3.0).abs() < 1e-12);
        assert!((sol.dual_objective - 7.0 / 3.0).abs() < 1e-12);
        assert!((sol.x[1] - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let sol = solve_lp(&lp(
            vec![1.0],
            &[vec![1.0]],
            vec![RowSense::Ge],
            vec![5.0],
            vec![0.0],
            vec![1.0],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let sol = solve_lp(&lp(
            vec![-1.0, 0.0],
            &[vec![1.0, -1.0]],
            vec![RowSense::Le],
            vec![1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_rejected() {
        let err = solve_lp(&lp(
            vec![1.0],
            &[],
            vec![],
            vec![],
            vec![f64::NEG_INFINITY],
            vec![1.0],
        ));
        assert!(err.is_err());
    }
}
