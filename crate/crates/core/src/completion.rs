//! Optimal dual completion.
//!
//! Given multipliers `ŷ ∈ K*` for the hard constraints `Ax ⪰_K b`, the
//! remaining multipliers `ẑ` of `Hx ⪰_C h` are chosen to maximize the
//! Lagrangian bound `bᵀŷ + hᵀẑ` subject to `Aᵀŷ + Hᵀẑ = c`, `ẑ ∈ C*`.
//! Each family below admits a closed form; [`oracle_complete`] solves the
//! same inner problem numerically and exists to check them.

use serde::{Deserialize, Serialize};

use crate::cones::{contains, ConeSpec};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix, LuFactors};
use crate::problems::{KnapsackInstance, ProdPlanInstance};
use crate::refsolve::{solve_lp, LpProblem, LpStatus, RowSense};

/// Data `ξ = (A, b, H, h, c)` of `min cᵀx  s.t.  Ax ⪰_K b,  Hx ⪰_C h`.
/// Both cones may be Cartesian products; blocks are laid out in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProblemData {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub h_mat: DenseMatrix,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub cone_k: Vec<ConeSpec>,
    pub cone_c: Vec<ConeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub bound: f64,
}

fn product_dim(cones: &[ConeSpec]) -> usize {
    cones.iter().map(ConeSpec::dim).sum()
}

/// Membership of `x` in the product of `cones` with tolerance `tol`.
pub fn product_contains(cones: &[ConeSpec], x: &[f64], tol: f64) -> Result<bool> {
    check_len("product cone", product_dim(cones), x.len())?;
    let mut off = 0;
    for k in cones {
        let d = k.dim();
        if !contains(k, &x[off..off + d], tol)? {
            return Ok(false);
        }
        off += d;
    }
    Ok(true)
}

fn dual_cones(cones: &[ConeSpec]) -> Vec<ConeSpec> {
    cones.iter().map(ConeSpec::dual).collect()
}

impl ConicProblemData {
    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        check_len("A columns", n, self.a.cols())?;
        check_len("H columns", n, self.h_mat.cols())?;
        check_len("b", self.a.rows(), self.b.len())?;
        check_len("h", self.h_mat.rows(), self.h.len())?;
        check_len("cone K", self.a.rows(), product_dim(&self.cone_k))?;
        check_len("cone C", self.h_mat.rows(), product_dim(&self.cone_c))?;
        for k in self.cone_k.iter().chain(&self.cone_c) {
            k.validate()?;
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(self.a.as_slice())
            && finite(self.h_mat.as_slice())
            && finite(&self.b)
            && finite(&self.h)
            && finite(&self.c))
        {
            return Err(Error::validation("conic data must be finite"));
        }
        Ok(())
    }

    /// `min cᵀx  s.t.  Ax ⪰_K b,  l ≤ x ≤ u`, with `H = [I; −I]`,
    /// `h = (l, −u)` and `z = (zˡ, zᵘ)`.
    pub fn bounded(
        c: Vec<f64>,
        a: DenseMatrix,
        b: Vec<f64>,
        cone_k: Vec<ConeSpec>,
        l: &[f64],
        u: &[f64],
    ) -> Result<Self> {
        let n = c.len();
        check_len("lower bounds", n, l.len())?;
        check_len("upper bounds", n, u.len())?;
        let mut h_mat = DenseMatrix::zeros(2 * n, n);
        for j in 0..n {
            h_mat.set(j, j, 1.0);
            h_mat.set(n + j, j, -1.0);
        }
        let mut h = l.to_vec();
        h.extend(u.iter().map(|v| -v));
        let data = Self {
            a,
            b,
            h_mat,
            h,
            c,
            cone_k,
            cone_c: vec![ConeSpec::nonneg(2 * n)],
        };
        data.validate()?;
        Ok(data)
    }

    /// `min −pᵀx  s.t.  Wx ≤ b,  0 ≤ x ≤ 1`, the hard rows written as
    /// `Wx − b ∈ ℝ₋ᵐ`.
    pub fn from_knapsack(inst: &KnapsackInstance) -> Result<Self> {
        let n = inst.n;
        Self::bounded(
            inst.p.iter().map(|v| -v).collect(),
            inst.w.clone(),
            inst.b.clone(),
            vec![ConeSpec::nonpos(inst.m)],
            &vec![0.0; n],
            &vec![1.0; n],
        )
    }

    /// Variables `(x, t)`; the hard row is `rᵀx − b ∈ ℝ₋` and item `j`
    /// contributes the block `(xⱼ, tⱼ, 0) − (0, 0, −√2) ∈ 𝒬ᵣ³`.
    pub fn from_prodplan(inst: &ProdPlanInstance) -> Result<Self> {
        let n = inst.n;
        let mut a = DenseMatrix::zeros(1, 2 * n);
        for j in 0..n {
            a.set(0, j, inst.r[j]);
        }
        let mut h_mat = DenseMatrix::zeros(3 * n, 2 * n);
        let mut h = vec![0.0; 3 * n];
        for j in 0..n {
            h_mat.set(3 * j, j, 1.0);
            h_mat.set(3 * j + 1, n + j, 1.0);
            h[3 * j + 2] = -std::f64::consts::SQRT_2;
        }
        let mut c = inst.d.clone();
        c.extend_from_slice(&inst.f);
        let data = Self {
            a,
            b: vec![inst.b],
            h_mat,
            h,
            c,
            cone_k: vec![ConeSpec::nonpos(1)],
            cone_c: vec![ConeSpec::rsoc(3); n],
        };
        data.validate()?;
        Ok(data)
    }

    /// `‖Aᵀy + Hᵀz − c‖∞`.
    pub fn equality_residual(&self, y: &[f64], z: &[f64]) -> Result<f64> {
        check_len("y", self.a.rows(), y.len())?;
        check_len("z", self.h_mat.rows(), z.len())?;
        let aty = self.a.tmul_vec(y);
        let htz = self.h_mat.tmul_vec(z);
        Ok((0..self.c.len())
            .map(|j| (aty[j] + htz[j] - self.c[j]).abs())
            .fold(0.0, f64::max))
    }

    /// Equality residual within `tol·(1 + ‖c‖∞)` and `y ∈ K*`, `z ∈ C*`
    /// within `tol`.
    pub fn is_dual_feasible(&self, sol: &DualSolution, tol: f64) -> Result<bool> {
        let c_inf = self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(self.equality_residual(&sol.y, &sol.z)? <= tol * (1.0 + c_inf)
            && product_contains(&dual_cones(&self.cone_k), &sol.y, tol)?
            && product_contains(&dual_cones(&self.cone_c), &sol.z, tol)?)
    }
}

/// `bᵀy + hᵀz`.
pub fn lagrangian_bound(xi: &ConicProblemData, y: &[f64], z: &[f64]) -> Result<f64> {
    check_len("y", xi.b.len(), y.len())?;
    check_len("z", xi.h.len(), z.len())?;
    Ok(dot(&xi.b, y) + dot(&xi.h, z))
}

fn reduced_cost(c: &[f64], a: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    check_len("c", a.cols(), c.len())?;
    check_len("y", a.rows(), y.len())?;
    let aty = a.tmul_vec(y);
    Ok(c.iter().zip(&aty).map(|(ci, ai)| ci - ai).collect())
}

fn pos_part(s: &[f64]) -> Vec<f64> {
    s.iter().map(|v| v.max(0.0)).collect()
}

fn neg_part(s: &[f64]) -> Vec<f64> {
    s.iter().map(|v| (-v).max(0.0)).collect()
}

/// `ẑˡ = |c − Aᵀŷ|⁺`, `ẑᵘ = |c − Aᵀŷ|⁻`.
pub fn complete_bounded(
    c: &[f64],
    a: &DenseMatrix,
    l: &[f64],
    u: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("lower bounds", c.len(), l.len())?;
    check_len("upper bounds", c.len(), u.len())?;
    if let Some(j) = (0..c.len()).find(|&j| !(l[j] < u[j])) {
        return Err(Error::validation(format!(
            "bounded completion needs l < u, violated at coordinate {j}"
        )));
    }
    let s = reduced_cost(c, a, y)?;
    Ok((pos_part(&s), neg_part(&s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => norm2(x),
            Norm::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// A subgradient; zero at the origin.
    fn subgradient(self, x: &[f64]) -> Vec<f64> {
        let sign = |v: f64| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        match self {
            Norm::L1 => x.iter().map(|&v| sign(v)).collect(),
            Norm::L2 => {
                let nrm = norm2(x);
                if nrm == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|v| v / nrm).collect()
                }
            }
            Norm::Linf => {
                let mut g = vec![0.0; x.len()];
                if let Some((k, _)) = x
                    .iter()
                    .enumerate()
                    .fold(None, |best: Option<(usize, f64)>, (k, v)| match best {
                        Some((_, m)) if m >= v.abs() => best,
                        _ => Some((k, v.abs())),
                    })
                {
                    g[k] = sign(x[k]);
                }
                g
            }
        }
    }
}

/// Completion for `‖x‖ ≤ r`: `ẑ = c − Aᵀŷ`, `ẑ₀ = ‖ẑ‖∗` where `norm` is the
/// primal norm.
pub fn complete_trust_region(c: &[f64], a: &DenseMatrix, y: &[f64], norm: Norm) -> Result<(f64, Vec<f64>)> {
    let z = reduced_cost(c, a, y)?;
    Ok((norm.dual().eval(&z), z))
}

/// Completion for `½xᵀFᵀFx + cᵀx`: `ẑ = F⁻ᵀ(c − Aᵀŷ)`, `ẑ₀ = ½‖ẑ‖²`.
pub fn complete_quadratic(c: &[f64], a: &DenseMatrix, f: &DenseMatrix, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len("F order", c.len(), f.rows())?;
    let s = reduced_cost(c, a, y)?;
    let z = LuFactors::new(f)?.solve_transpose(&s)?;
    Ok((0.5 * dot(&z, &z), z))
}

fn check_nonpositive(y: &[f64]) -> Result<()> {
    match y.iter().position(|v| !(*v <= 0.0)) {
        Some(i) => Err(Error::validation(format!(
            "multiplier y[{i}] = {} must be <= 0; project before completing",
            y[i]
        ))),
        None => Ok(()),
    }
}

/// `ẑˡ = |−p − Wᵀŷ|⁺`, `ẑᵘ = |−p − Wᵀŷ|⁻`.
pub fn complete_knapsack(p: &[f64], w: &DenseMatrix, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_nonpositive(y)?;
    let c: Vec<f64> = p.iter().map(|v| -v).collect();
    let s = reduced_cost(&c, w, y)?;
    Ok((pos_part(&s), neg_part(&s)))
}

/// `π = d − rŷ`, `τ = f`, `σⱼ = −√(2πⱼτⱼ)`.
pub fn complete_prodplan(d: &[f64], f: &[f64], r: &[f64], y: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_len("prodplan f", d.len(), f.len())?;
    check_len("prodplan r", d.len(), r.len())?;
    check_nonpositive(&[y])?;
    let pi: Vec<f64> = d.iter().zip(r).map(|(dj, rj)| dj - rj * y).collect();
    let tau = f.to_vec();
    let sigma = pi.iter().zip(f).map(|(p, t)| -(2.0 * p * t).sqrt()).collect();
    Ok((pi, tau, sigma))
}

/// Knapsack completion as a full dual solution with `z = (zˡ, zᵘ)`.
pub fn knapsack_dual(inst: &KnapsackInstance, y: &[f64]) -> Result<DualSolution> {
    let (zl, zu) = complete_knapsack(&inst.p, &inst.w, y)?;
    let bound = dot(&inst.b, y) - zu.iter().sum::<f64>();
    let mut z = zl;
    z.extend(zu);
    Ok(DualSolution {
        y: y.to_vec(),
        z,
        bound,
    })
}

/// Production-planning completion with `z` interleaved as `(πⱼ, τⱼ, σⱼ)`.
pub fn prodplan_dual(inst: &ProdPlanInstance, y: f64) -> Result<DualSolution> {
    let (pi, tau, sigma) = complete_prodplan(&inst.d, &inst.f, &inst.r, y)?;
    let bound = inst.b * y - std::f64::consts::SQRT_2 * sigma.iter().sum::<f64>();
    let z = (0..inst.n).flat_map(|j| [pi[j], tau[j], sigma[j]]).collect();
    Ok(DualSolution {
        y: vec![y],
        z,
        bound,
    })
}

/// Inputs of the bound-only completions used during training.
#[derive(Debug, Clone, Copy)]
pub enum CompletionInput<'a> {
    Bounded {
        c: &'a [f64],
        a: &'a DenseMatrix,
        b: &'a [f64],
        l: &'a [f64],
        u: &'a [f64],
    },
    TrustRegion {
        c: &'a [f64],
        a: &'a DenseMatrix,
        b: &'a [f64],
        radius: f64,
        norm: Norm,
    },
    Quadratic {
        c: &'a [f64],
        a: &'a DenseMatrix,
        b: &'a [f64],
        f: &'a DenseMatrix,
    },
    Knapsack(&'a KnapsackInstance),
    Prodplan(&'a ProdPlanInstance),
}

/// Lagrangian bound of the completed dual at `ŷ`.
pub fn completion_bound(input: &CompletionInput<'_>, y: &[f64]) -> Result<f64> {
    match *input {
        CompletionInput::Bounded { c, a, b, l, u } => {
            let (zl, zu) = complete_bounded(c, a, l, u, y)?;
            Ok(dot(b, y) + dot(l, &zl) - dot(u, &zu))
        }
        CompletionInput::TrustRegion {
            c,
            a,
            b,
            radius,
            norm,
        } => {
            let (z0, _) = complete_trust_region(c, a, y, norm)?;
            Ok(dot(b, y) - radius * z0)
        }
        CompletionInput::Quadratic { c, a, b, f } => {
            let (z0, _) = complete_quadratic(c, a, f, y)?;
            Ok(dot(b, y) - z0)
        }
        CompletionInput::Knapsack(inst) => Ok(knapsack_dual(inst, y)?.bound),
        CompletionInput::Prodplan(inst) => {
            check_len("prodplan y", 1, y.len())?;
            Ok(prodplan_dual(inst, y[0])?.bound)
        }
    }
}

/// `cotangent · ∂bound/∂ŷ`. At kinks `d|s|⁺/ds = 1[s > 0]` and
/// `d|s|⁻/ds = −1[s < 0]`.
pub fn completion_vjp(input: &CompletionInput<'_>, y: &[f64], cotangent: f64) -> Result<Vec<f64>> {
    let mut g = match *input {
        CompletionInput::Bounded { c, a, b, l, u } => {
            complete_bounded(c, a, l, u, y)?;
            let s = reduced_cost(c, a, y)?;
            let weight: Vec<f64> = (0..s.len())
                .map(|j| {
                    if s[j] > 0.0 {
                        l[j]
                    } else if s[j] < 0.0 {
                        u[j]
                    } else {
                        0.0
                    }
                })
                .collect();
            sub(b, &a.mul_vec(&weight))
        }
        CompletionInput::TrustRegion {
            c,
            a,
            b,
            radius,
            norm,
        } => {
            let s = reduced_cost(c, a, y)?;
            let dn = norm.dual().subgradient(&s);
            let mut g = b.to_vec();
            for (gi, v) in g.iter_mut().zip(a.mul_vec(&dn)) {
                *gi += radius * v;
            }
            g
        }
        CompletionInput::Quadratic { c, a, b, f } => {
            let (_, z) = complete_quadratic(c, a, f, y)?;
            let w = LuFactors::new(f)?.solve(&z)?;
            let mut g = b.to_vec();
            for (gi, v) in g.iter_mut().zip(a.mul_vec(&w)) {
                *gi += v;
            }
            g
        }
        CompletionInput::Knapsack(inst) => {
            let (_, zu) = complete_knapsack(&inst.p, &inst.w, y)?;
            let active: Vec<f64> = zu.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
            sub(&inst.b, &inst.w.mul_vec(&active))
        }
        CompletionInput::Prodplan(inst) => {
            check_len("prodplan y", 1, y.len())?;
            check_nonpositive(y)?;
            vec![crate::refsolve::prodplan_dual_slope(inst, y[0])]
        }
    };
    for v in &mut g {
        *v *= cotangent;
    }
    Ok(g)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solves the `ŷ`-fixed inner dual numerically. Supports `C` made of
/// orthants (via the simplex) or of 3-dimensional rotated cones whose rows
/// select two distinct variables and a constant (via a one-dimensional
/// primal minimization per block). Not differentiable; meant for checks.
pub fn oracle_complete(xi: &ConicProblemData, y: &[f64]) -> Result<DualSolution> {
    xi.validate()?;
    check_len("y", xi.b.len(), y.len())?;
    if !product_contains(&dual_cones(&xi.cone_k), y, 1e-12)? {
        return Err(Error::validation("y must lie in the dual cone K*"));
    }
    let s = reduced_cost(&xi.c, &xi.a, y)?;
    let z = if xi.cone_c.iter().all(|k| matches!(k, ConeSpec::Nonneg { .. })) {
        oracle_orthant(xi, &s)?
    } else if xi.cone_c.iter().all(|k| *k == ConeSpec::rsoc(3)) {
        oracle_rsoc_blocks(xi, &s)?
    } else {
        return Err(Error::Unsupported(
            "oracle completion supports orthant or separable rotated-cone C only".into(),
        ));
    };
    let bound = lagrangian_bound(xi, y, &z)?;
    Ok(DualSolution {
        y: y.to_vec(),
        z,
        bound,
    })
}

/// `max hᵀz  s.t.  Hᵀz = s,  z ≥ 0`.
fn oracle_orthant(xi: &ConicProblemData, s: &[f64]) -> Result<Vec<f64>> {
    let k = xi.h.len();
    let lp = LpProblem {
        objective: xi.h.iter().map(|v| -v).collect(),
        constraints: xi.h_mat.transpose(),
        senses: vec![RowSense::Eq; s.len()],
        rhs: s.to_vec(),
        lower: vec![0.0; k],
        upper: vec![f64::INFINITY; k],
    };
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        // an infeasible inner dual means an unbounded inner primal
        LpStatus::Infeasible => Err(Error::Infeasible),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

fn single_entry(row: &[f64]) -> Option<(usize, f64)> {
    let mut nz = row.iter().enumerate().filter(|(_, v)| **v != 0.0);
    let first = nz.next().map(|(j, v)| (j, *v));
    if nz.next().is_some() {
        None
    } else {
        first
    }
}

/// Each block reads `(αxᵢ, βxⱼ, −h₃) ∈ 𝒬ᵣ³`. In `u = αxᵢ`, `v = βxⱼ` the
/// inner problem is `min au + bv  s.t.  2uv ≥ h₃²`, solved numerically.
fn oracle_rsoc_blocks(xi: &ConicProblemData, s: &[f64]) -> Result<Vec<f64>> {
    let n = xi.c.len();
    let mut covered = vec![false; n];
    let mut z = vec![0.0; xi.h.len()];
    for blk in 0..xi.cone_c.len() {
        let r0 = 3 * blk;
        let unsupported = || Error::Unsupported(format!("rotated-cone block {blk} is not separable"));
        let (i, alpha) = single_entry(xi.h_mat.row(r0)).ok_or_else(unsupported)?;
        let (j, beta) = single_entry(xi.h_mat.row(r0 + 1)).ok_or_else(unsupported)?;
        if i == j
            || covered[i]
            || covered[j]
            || xi.h_mat.row(r0 + 2).iter().any(|v| *v != 0.0)
            || xi.h[r0] != 0.0
            || xi.h[r0 + 1] != 0.0
            || alpha <= 0.0
            || beta <= 0.0
        {
            return Err(unsupported());
        }
        covered[i] = true;
        covered[j] = true;
        let kappa = xi.h[r0 + 2];
        let (a, b) = (s[i] / alpha, s[j] / beta);
        if a < 0.0 || b < 0.0 {
            return Err(Error::Unbounded);
        }
        let inner = if kappa == 0.0 || a == 0.0 || b == 0.0 {
            0.0
        } else {
            min_over_hyperbola(a, b, kappa * kappa / 2.0)
        };
        // the last entry carries the inner value through hᵀz
        z[r0] = a;
        z[r0 + 1] = b;
        z[r0 + 2] = if kappa == 0.0 { -(2.0 * a * b).sqrt() } else { inner / kappa };
    }
    if let Some(j) = (0..n).find(|&j| !covered[j]) {
        if s[j] != 0.0 {
            return Err(Error::Unbounded);
        }
    }
    Ok(z)
}

/// `min_{u>0} a·u + b·q/u` by golden-section search on `ln u`.
fn min_over_hyperbola(a: f64, b: f64, q: f64) -> f64 {
    let phi = |t: f64| {
        let u = t.exp();
        a * u + b * q / u
    };
    // the minimizer satisfies a·u² = b·q; bracket generously around scale
    let centre = 0.5 * ((b * q).ln() - a.ln());
    let (mut lo, mut hi) = (centre - 40.0, centre + 40.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = phi(x2);
        }
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    f1.min(f2)
}
