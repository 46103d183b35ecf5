//! The DC3 baseline applied to the dual: the network predicts part of the
//! dual variables, equality completion recovers the rest, and a fixed
//! number of gradient steps on a violation penalty `φ` corrects the
//! inequalities.
//!
//! Knapsack predicts `v = (y, zˡ)` with `zᵘ = p + Wᵀy + zˡ` and
//! `φ = ‖max(0,y)‖² + ‖min(0,zˡ)‖² + ‖min(0,zᵘ)‖²`.
//!
//! Production planning predicts `v = (y, σ)` with `π = d − ry`, `τ = f` and
//! `φ = max(0,y)² + Σ min(0,πⱼ)² + Σ max(0, σⱼ² − 2πⱼτⱼ)²`.

use crate::linalg::dot;
use crate::problems::{Instance, KnapsackInstance, ProdPlanInstance};

fn hinge_pos(v: f64) -> f64 {
    v.max(0.0)
}

fn hinge_neg(v: f64) -> f64 {
    v.min(0.0)
}

fn step(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// Number of predicted variables.
pub fn dc3_dim(inst: &Instance) -> usize {
    match inst {
        Instance::Knapsack(k) => k.m + k.n,
        Instance::Prodplan(p) => 1 + p.n,
    }
}

fn knap_zu(k: &KnapsackInstance, v: &[f64]) -> Vec<f64> {
    let (y, zl) = v.split_at(k.m);
    let wty = k.w.tmul_vec(y);
    (0..k.n).map(|j| k.p[j] + wty[j] + zl[j]).collect()
}

fn prod_pi(p: &ProdPlanInstance, y: f64) -> Vec<f64> {
    (0..p.n).map(|j| p.d[j] - p.r[j] * y).collect()
}

/// Violation penalty `φ(v)`.
pub fn phi(inst: &Instance, v: &[f64]) -> f64 {
    match inst {
        Instance::Knapsack(k) => {
            let (y, zl) = v.split_at(k.m);
            let zu = knap_zu(k, v);
            y.iter().map(|&a| hinge_pos(a).powi(2)).sum::<f64>()
                + zl.iter().map(|&a| hinge_neg(a).powi(2)).sum::<f64>()
                + zu.iter().map(|&a| hinge_neg(a).powi(2)).sum::<f64>()
        }
        Instance::Prodplan(p) => {
            let (y, sigma) = (v[0], &v[1..]);
            let pi = prod_pi(p, y);
            hinge_pos(y).powi(2)
                + pi.iter().map(|&a| hinge_neg(a).powi(2)).sum::<f64>()
                + (0..p.n)
                    .map(|j| hinge_pos(sigma[j] * sigma[j] - 2.0 * pi[j] * p.f[j]).powi(2))
                    .sum::<f64>()
        }
    }
}

/// `∇φ(v)`.
pub fn grad_phi(inst: &Instance, v: &[f64]) -> Vec<f64> {
    match inst {
        Instance::Knapsack(k) => {
            let (y, zl) = v.split_at(k.m);
            let zu = knap_zu(k, v);
            let gzu: Vec<f64> = zu.iter().map(|&a| 2.0 * hinge_neg(a)).collect();
            let wg = k.w.mul_vec(&gzu);
            let mut g = Vec::with_capacity(v.len());
            g.extend((0..k.m).map(|i| 2.0 * hinge_pos(y[i]) + wg[i]));
            g.extend((0..k.n).map(|j| 2.0 * hinge_neg(zl[j]) + gzu[j]));
            g
        }
        Instance::Prodplan(p) => {
            let (y, sigma) = (v[0], &v[1..]);
            let pi = prod_pi(p, y);
            let mut gy = 2.0 * hinge_pos(y);
            let mut g = vec![0.0; v.len()];
            for j in 0..p.n {
                let q = hinge_pos(sigma[j] * sigma[j] - 2.0 * pi[j] * p.f[j]);
                gy += -2.0 * p.r[j] * hinge_neg(pi[j]) + 4.0 * p.r[j] * p.f[j] * q;
                g[1 + j] = 4.0 * sigma[j] * q;
            }
            g[0] = gy;
            g
        }
    }
}

/// `∇²φ(v)·u`, using the one-sided second derivative `0` at hinge kinks.
pub fn hvp_phi(inst: &Instance, v: &[f64], u: &[f64]) -> Vec<f64> {
    match inst {
        Instance::Knapsack(k) => {
            let (y, zl) = v.split_at(k.m);
            let (uy, uz) = u.split_at(k.m);
            let zu = knap_zu(k, v);
            let wtu = k.w.tmul_vec(uy);
            let t: Vec<f64> = (0..k.n)
                .map(|j| 2.0 * step(zu[j] < 0.0) * (wtu[j] + uz[j]))
                .collect();
            let wt = k.w.mul_vec(&t);
            let mut h = Vec::with_capacity(v.len());
            h.extend((0..k.m).map(|i| 2.0 * step(y[i] > 0.0) * uy[i] + wt[i]));
            h.extend((0..k.n).map(|j| 2.0 * step(zl[j] < 0.0) * uz[j] + t[j]));
            h
        }
        Instance::Prodplan(p) => {
            let (y, sigma) = (v[0], &v[1..]);
            let pi = prod_pi(p, y);
            let mut h = vec![0.0; v.len()];
            let mut hyy = 2.0 * step(y > 0.0);
            for j in 0..p.n {
                let (r, tau, s) = (p.r[j], p.f[j], sigma[j]);
                hyy += 2.0 * r * r * step(pi[j] < 0.0);
                let q = s * s - 2.0 * pi[j] * tau;
                if q > 0.0 {
                    hyy += 8.0 * r * r * tau * tau;
                    let hys = 8.0 * r * tau * s;
                    h[0] += hys * u[1 + j];
                    h[1 + j] += hys * u[0] + (4.0 * q + 8.0 * s * s) * u[1 + j];
                }
            }
            h[0] += hyy * u[0];
            h
        }
    }
}

/// The dual objective at `v` after equality completion (not a valid bound
/// unless `v` is feasible).
pub fn dual_objective(inst: &Instance, v: &[f64]) -> f64 {
    match inst {
        Instance::Knapsack(k) => dot(&k.b, &v[..k.m]) - knap_zu(k, v).iter().sum::<f64>(),
        Instance::Prodplan(p) => p.b * v[0] - std::f64::consts::SQRT_2 * v[1..].iter().sum::<f64>(),
    }
}

pub fn grad_dual_objective(inst: &Instance, v: &[f64]) -> Vec<f64> {
    match inst {
        Instance::Knapsack(k) => {
            let colsum = k.w.mul_vec(&vec![1.0; k.n]);
            let mut g: Vec<f64> = (0..k.m).map(|i| k.b[i] - colsum[i]).collect();
            g.extend(std::iter::repeat(-1.0).take(k.n));
            debug_assert_eq!(g.len(), v.len());
            g
        }
        Instance::Prodplan(p) => {
            let mut g = vec![-std::f64::consts::SQRT_2; 1 + p.n];
            g[0] = p.b;
            g
        }
    }
}

/// Applies `steps` corrections `v ← v − γ∇φ(v)`, returning every iterate
/// `v₀ … v_steps`.
pub fn correct(inst: &Instance, v0: &[f64], steps: usize, rate: f64) -> Vec<Vec<f64>> {
    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(v0.to_vec());
    for _ in 0..steps {
        let v = iterates.last().unwrap();
        let g = grad_phi(inst, v);
        let next = v.iter().zip(&g).map(|(a, b)| a - rate * b).collect();
        iterates.push(next);
    }
    iterates
}

/// Soft loss `−objective + ρφ` of the corrected point and its gradient with
/// respect to the uncorrected prediction `v₀`.
pub fn soft_loss_and_grad(inst: &Instance, v0: &[f64], steps: usize, rate: f64, rho: f64) -> (f64, Vec<f64>) {
    let iterates = correct(inst, v0, steps, rate);
    let vk = iterates.last().unwrap();
    let loss = -dual_objective(inst, vk) + rho * phi(inst, vk);
    let gphi = grad_phi(inst, vk);
    let mut cot: Vec<f64> = grad_dual_objective(inst, vk)
        .iter()
        .zip(&gphi)
        .map(|(go, gp)| -go + rho * gp)
        .collect();
    for v in iterates[..steps].iter().rev() {
        let h = hvp_phi(inst, v, &cot);
        for (c, hv) in cot.iter_mut().zip(&h) {
            *c -= rate * hv;
        }
    }
    (loss, cot)
}

/// Multiplier used for the test-time repair: `min(y, 0)` of the corrected
/// prediction.
pub fn repaired_y(inst: &Instance, v0: &[f64], steps: usize, rate: f64) -> Vec<f64> {
    let iterates = correct(inst, v0, steps, rate);
    let vk = iterates.last().unwrap();
    let m = match inst {
        Instance::Knapsack(k) => k.m,
        Instance::Prodplan(_) => 1,
    };
    vk[..m].iter().map(|&y| y.min(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn knap() -> Instance {
        let w = DenseMatrix::from_rows(&[vec![2.0, 1.0, 3.0], vec![1.0, 4.0, 1.0]]).unwrap();
        Instance::Knapsack(KnapsackInstance::new(vec![3.0, 1.0, 2.0], w, vec![2.0, 3.0]).unwrap())
    }

    fn prod() -> Instance {
        Instance::Prodplan(ProdPlanInstance::new(vec![2.0, 1.0], vec![8.0, 3.0], vec![1.0, 0.5], 1.0).unwrap())
    }

    fn fd_grad(f: impl Fn(&[f64]) -> f64, v: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..v.len())
            .map(|k| {
                let mut a = v.to_vec();
                a[k] += h;
                let mut b = v.to_vec();
                b[k] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol * (1.0 + y.abs()), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn violated_y_correction_step() {
        let inst = prod();
        // only y violates: π > 0 and σ = 0 keep the other terms inactive
        let v = correct(&inst, &[0.5, 0.0, 0.0], 1, 0.1);
        assert!((v[1][0] - (0.5 - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn feasible_points_are_fixed() {
        let inst = knap();
        let v = [-0.1, -0.1, 0.0, 0.0, 0.0];
        assert_eq!(phi(&inst, &v), 0.0);
        let it = correct(&inst, &v, 10, 1e-2);
        assert_eq!(it.last().unwrap(), &v.to_vec());
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        for (inst, v) in [
            (knap(), vec![0.3, -0.2, -0.5, 0.4, -9.0]),
            (prod(), vec![0.2, -3.0, 5.0]),
            (prod(), vec![-1.0, 4.5, -0.3]),
        ] {
            assert_close(&grad_phi(&inst, &v), &fd_grad(|x| phi(&inst, x), &v), 1e-6);
            for k in 0..v.len() {
                let mut e = vec![0.0; v.len()];
                e[k] = 1.0;
                let h = hvp_phi(&inst, &v, &e);
                let fd = fd_grad(|x| grad_phi(&inst, x)[k], &v);
                assert_close(&h, &fd, 1e-5);
            }
            assert_close(
                &grad_dual_objective(&inst, &v),
                &fd_grad(|x| dual_objective(&inst, x), &v),
                1e-6,
            );
        }
    }

    #[test]
    fn soft_loss_gradient_through_corrections() {
        for (inst, v) in [(knap(), vec![0.3, -0.2, -0.5, 0.4, -9.0]), (prod(), vec![0.2, -3.0, 5.0])] {
            let (_, g) = soft_loss_and_grad(&inst, &v, 10, 1e-3, 10.0);
            let fd = fd_grad(|x| soft_loss_and_grad(&inst, x, 10, 1e-3, 10.0).0, &v);
            assert_close(&g, &fd, 1e-5);
        }
    }

    #[test]
    fn repair_clamps_positive_y() {
        let inst = prod();
        assert_eq!(repaired_y(&inst, &[5.0, 0.0, 0.0], 0, 0.0), vec![0.0]);
    }
}
