//! Radial projections `x + λρ` with the smallest `λ ≥ 0` that reaches the
//! cone, in closed form for every supported cone.
//!
//! Ray directions (see [`radial_ray`]):
//!
//! | cone        | ray ρ                     | moved coordinate |
//! |-------------|---------------------------|------------------|
//! | `Nonneg`    | `e`, per coordinate       | all negative ones |
//! | `Nonpos`    | `−e`, per coordinate      | all positive ones |
//! | `Soc`       | `e₁`                      | `x₁` |
//! | `Rsoc`      | `(e₁ + e₂)/√2`            | `x₁`, `x₂` |
//! | `Psd`       | identity                  | diagonal |
//! | `Exp`       | `−e₃`                     | `x₃` |
//! | `DualExp`   | `e₂`                      | `y₂` |
//! | `Power`     | `e₁`                      | `x₁` |
//! | `DualPower` | `e₁`                      | `y₁` |
//!
//! The exponential and power rays lie on the boundary of the cone rather than
//! in its interior; the projection still terminates because the moved
//! coordinate alone can always restore membership under the strict-positivity
//! preconditions (`x₁, x₂ > 0` for `Exp`, `y₁ > 0, y₃ < 0` for `DualExp`,
//! `x₂ > 0` for the power cones).
//!
//! At the switch of each `max`/`min`, [`radial_vjp`] takes the identity
//! branch.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use super::{rsoc_rotate, smat, svec_diag_positions, ConeSpec};
use crate::error::{check_len, Error, Result};
use crate::linalg::{lambda_min, lambda_min_with_vector, norm2};

/// Output of a radial projection together with the step length along the ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProjection {
    pub point: Vec<f64>,
    /// Multiple of the ray that was added. For the orthants, where each
    /// coordinate moves independently, this is the largest coordinate shift.
    pub step: f64,
}

/// The ray traced by [`project_radial`] for this cone.
pub fn radial_ray(k: &ConeSpec) -> Vec<f64> {
    let d = k.dim();
    let mut ray = vec![0.0; d];
    match *k {
        ConeSpec::Nonneg { .. } => ray.fill(1.0),
        ConeSpec::Nonpos { .. } => ray.fill(-1.0),
        ConeSpec::Soc { .. } | ConeSpec::Power { .. } | ConeSpec::DualPower { .. } => ray[0] = 1.0,
        ConeSpec::Rsoc { .. } => {
            ray[0] = FRAC_1_SQRT_2;
            ray[1] = FRAC_1_SQRT_2;
        }
        ConeSpec::Psd { n } => {
            for p in svec_diag_positions(n) {
                ray[p] = 1.0;
            }
        }
        ConeSpec::Exp => ray[2] = -1.0,
        ConeSpec::DualExp => ray[1] = 1.0,
    }
    ray
}

fn domain(coordinate: usize, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        coordinate,
        value,
        reason,
    }
}

fn check_domain(k: &ConeSpec, x: &[f64]) -> Result<()> {
    k.validate()?;
    check_len("radial projection", k.dim(), x.len())?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(domain(i, x[i], "input must be finite"));
    }
    match *k {
        ConeSpec::Exp => {
            if !(x[0] > 0.0) {
                return Err(domain(0, x[0], "exponential cone radial projection needs x1 > 0"));
            }
            if !(x[1] > 0.0) {
                return Err(domain(1, x[1], "exponential cone radial projection needs x2 > 0"));
            }
        }
        ConeSpec::DualExp => {
            if !(x[0] > 0.0) {
                return Err(domain(0, x[0], "dual exponential radial projection needs y1 > 0"));
            }
            if !(x[2] < 0.0) {
                return Err(domain(2, x[2], "dual exponential radial projection needs y3 < 0"));
            }
        }
        ConeSpec::Power { .. } | ConeSpec::DualPower { .. } => {
            if !(x[1] > 0.0) {
                return Err(domain(1, x[1], "power cone radial projection needs x2 > 0"));
            }
        }
        _ => {}
    }
    Ok(())
}

/// `x₂^{(α−1)/α} |x₃|^{1/α}`: the smallest `x₁` with `(x₁, x₂, x₃) ∈ 𝒫_α`.
fn power_threshold(alpha: f64, x2: f64, x3: f64) -> f64 {
    if x3 == 0.0 {
        return 0.0;
    }
    x2.powf((alpha - 1.0) / alpha) * x3.abs().powf(1.0 / alpha)
}

/// `y₃ + y₃ ln(y₁/(−y₃))`: the smallest `y₂` with `y ∈ ℰ*`.
fn dual_exp_threshold(y1: f64, y3: f64) -> f64 {
    y3 + y3 * (y1 / -y3).ln()
}

/// Radial projection with its step length.
pub fn radial_projection(k: &ConeSpec, x: &[f64]) -> Result<RadialProjection> {
    check_domain(k, x)?;
    let mut out = x.to_vec();
    let step = match *k {
        ConeSpec::Nonneg { .. } => {
            let mut step = 0.0_f64;
            for v in &mut out {
                if *v < 0.0 {
                    step = step.max(-*v);
                    *v = 0.0;
                }
            }
            step
        }
        ConeSpec::Nonpos { .. } => {
            let mut step = 0.0_f64;
            for v in &mut out {
                if *v > 0.0 {
                    step = step.max(*v);
                    *v = 0.0;
                }
            }
            step
        }
        ConeSpec::Soc { .. } => {
            let tail = norm2(&x[1..]);
            out[0] = x[0].max(tail);
            out[0] - x[0]
        }
        ConeSpec::Rsoc { .. } => {
            let r = rsoc_rotate(x);
            let step = (norm2(&r[1..]) - r[0]).max(0.0);
            out[0] += step * FRAC_1_SQRT_2;
            out[1] += step * FRAC_1_SQRT_2;
            step
        }
        ConeSpec::Psd { n } => {
            let step = (-lambda_min(&smat(n, x))).max(0.0);
            for p in svec_diag_positions(n) {
                out[p] += step;
            }
            step
        }
        ConeSpec::Exp => {
            let cap = x[1] * (x[0] / x[1]).ln();
            out[2] = x[2].min(cap);
            x[2] - out[2]
        }
        ConeSpec::DualExp => {
            out[1] = x[1].max(dual_exp_threshold(x[0], x[2]));
            out[1] - x[1]
        }
        ConeSpec::Power { alpha } => {
            out[0] = x[0].max(power_threshold(alpha, x[1], x[2]));
            out[0] - x[0]
        }
        ConeSpec::DualPower { alpha } => {
            let scaled = (x[0] / alpha).max(power_threshold(alpha, x[1] / (1.0 - alpha), x[2]));
            out[0] = alpha * scaled;
            out[0] - x[0]
        }
    };
    Ok(RadialProjection { point: out, step })
}

/// Radial projection onto `K`.
pub fn project_radial(k: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    radial_projection(k, x).map(|r| r.point)
}

/// Radial projection onto the dual cone `K*`.
pub fn project_dual_radial(k: &ConeSpec, y: &[f64]) -> Result<Vec<f64>> {
    project_radial(&k.dual(), y)
}

/// `Jᵀ · cotangent` where `J` is the Jacobian of [`project_radial`] at `x`.
pub fn radial_vjp(k: &ConeSpec, x: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
    check_domain(k, x)?;
    check_len("radial vjp cotangent", k.dim(), cotangent.len())?;
    let mut g = cotangent.to_vec();
    match *k {
        ConeSpec::Nonneg { .. } => {
            for (gi, xi) in g.iter_mut().zip(x) {
                if *xi < 0.0 {
                    *gi = 0.0;
                }
            }
        }
        ConeSpec::Nonpos { .. } => {
            for (gi, xi) in g.iter_mut().zip(x) {
                if *xi > 0.0 {
                    *gi = 0.0;
                }
            }
        }
        ConeSpec::Soc { .. } => {
            let tail = norm2(&x[1..]);
            if x[0] < tail {
                let c0 = g[0];
                g[0] = 0.0;
                for (gi, xi) in g[1..].iter_mut().zip(&x[1..]) {
                    *gi += c0 * xi / tail;
                }
            }
        }
        ConeSpec::Rsoc { .. } => {
            // J = T J_soc T with T the (symmetric) rotation
            let r = rsoc_rotate(x);
            let tail = norm2(&r[1..]);
            if r[0] < tail {
                let mut c = rsoc_rotate(cotangent);
                let c0 = c[0];
                c[0] = 0.0;
                for (ci, ri) in c[1..].iter_mut().zip(&r[1..]) {
                    *ci += c0 * ri / tail;
                }
                g = rsoc_rotate(&c);
            }
        }
        ConeSpec::Psd { n } => {
            let (lmin, v) = lambda_min_with_vector(&smat(n, x));
            if lmin < 0.0 {
                // ∂(−λ_min)/∂svec(X) = −svec(v vᵀ)
                let trace_cot: f64 = svec_diag_positions(n).map(|p| cotangent[p]).sum();
                let vvt = outer_svec(&v);
                for (gi, wi) in g.iter_mut().zip(vvt) {
                    *gi -= trace_cot * wi;
                }
            }
        }
        ConeSpec::Exp => {
            let ratio_ln = (x[0] / x[1]).ln();
            if x[2] > x[1] * ratio_ln {
                let c3 = g[2];
                g[2] = 0.0;
                g[0] += c3 * x[1] / x[0];
                g[1] += c3 * (ratio_ln - 1.0);
            }
        }
        ConeSpec::DualExp => {
            if x[1] < dual_exp_threshold(x[0], x[2]) {
                let c2 = g[1];
                g[1] = 0.0;
                g[0] += c2 * x[2] / x[0];
                g[2] += c2 * (x[0] / -x[2]).ln();
            }
        }
        ConeSpec::Power { alpha } => {
            let th = power_threshold(alpha, x[1], x[2]);
            if x[0] < th {
                let c1 = g[0];
                g[0] = 0.0;
                g[1] += c1 * (alpha - 1.0) / alpha * th / x[1];
                if x[2] != 0.0 {
                    g[2] += c1 * th / (alpha * x[2]);
                }
            }
        }
        ConeSpec::DualPower { alpha } => {
            let s2 = x[1] / (1.0 - alpha);
            let th = power_threshold(alpha, s2, x[2]);
            if x[0] / alpha < th {
                let c1 = g[0];
                g[0] = 0.0;
                // ŷ₁ = α·θ(y₂/(1−α), y₃)
                g[1] += c1 * alpha * ((alpha - 1.0) / alpha * th / s2) / (1.0 - alpha);
                if x[2] != 0.0 {
                    g[2] += c1 * alpha * th / (alpha * x[2]);
                }
            }
        }
    }
    Ok(g)
}

fn outer_svec(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(v[i] * v[i]);
        for j in (i + 1)..n {
            out.push(SQRT_2 * v[i] * v[j]);
        }
    }
    out
}
