//! WebAssembly bindings for the static page in `www/`. Each export takes
//! plain numbers and returns a JSON string; the `*_json` functions hold the
//! logic so it can be tested natively.

use dll_core::cones::{membership_slack, project_euclidean, radial_projection, ConeSpec};
use dll_core::completion::{knapsack_dual, prodplan_dual};
use dll_core::linalg::DenseMatrix;
use dll_core::problems::{KnapsackInstance, ProdPlanInstance};
use dll_core::refsolve::{solve_knapsack_lp, solve_prodplan};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Projection {
    point: Vec<f64>,
    slack: f64,
    lambda: Option<f64>,
}

pub fn project_json(cone: &str, mode: &str, x: &[f64]) -> Result<String, String> {
    let k: ConeSpec = cone.parse().map_err(|e| format!("{e}"))?;
    let (point, lambda) = match mode {
        "euclidean" => (project_euclidean(&k, x).map_err(|e| e.to_string())?, None),
        "radial" => {
            let r = radial_projection(&k, x).map_err(|e| e.to_string())?;
            (r.point, Some(r.step))
        }
        other => return Err(format!("unknown mode '{other}'")),
    };
    let slack = membership_slack(&k, &point).map_err(|e| e.to_string())?;
    to_json(&Projection { point, slack, lambda })
}

#[derive(Serialize)]
struct DualCurve {
    y_star: f64,
    optimum: f64,
    ys: Vec<f64>,
    bounds: Vec<f64>,
}

/// Certified bound `L(y)` on a grid over `[2y*, 0]` (or `[−1, 0]` when
/// `y* = 0`), with the maximizer.
pub fn prodplan_curve_json(d: &[f64], f: &[f64], r: &[f64], b: f64, samples: usize) -> Result<String, String> {
    let inst = ProdPlanInstance::new(d.to_vec(), f.to_vec(), r.to_vec(), b).map_err(|e| e.to_string())?;
    let opt = solve_prodplan(&inst).map_err(|e| e.to_string())?;
    let y_star = opt.y[0];
    let lo = if y_star < 0.0 { 2.0 * y_star } else { -1.0 };
    let samples = samples.clamp(2, 2000);
    let mut ys = Vec::with_capacity(samples);
    let mut bounds = Vec::with_capacity(samples);
    for i in 0..samples {
        let y = lo * (1.0 - i as f64 / (samples - 1) as f64);
        ys.push(y);
        bounds.push(prodplan_dual(&inst, y).map_err(|e| e.to_string())?.bound);
    }
    to_json(&DualCurve {
        y_star,
        optimum: opt.value,
        ys,
        bounds,
    })
}

#[derive(Serialize)]
struct KnapsackBound {
    bound: f64,
    z_lower: Vec<f64>,
    z_upper: Vec<f64>,
    optimum: f64,
    y_star: Vec<f64>,
}

/// Bound from multipliers `y ≤ 0` next to the LP relaxation optimum.
/// `w` is the `m × n` weight matrix in row-major order.
pub fn knapsack_bound_json(p: &[f64], w: &[f64], b: &[f64], y: &[f64]) -> Result<String, String> {
    let (m, n) = (b.len(), p.len());
    let w = DenseMatrix::from_row_major(m, n, w.to_vec()).map_err(|e| e.to_string())?;
    let inst = KnapsackInstance::new(p.to_vec(), w, b.to_vec()).map_err(|e| e.to_string())?;
    let dual = knapsack_dual(&inst, y).map_err(|e| e.to_string())?;
    let opt = solve_knapsack_lp(&inst).map_err(|e| e.to_string())?;
    let z_upper = dual.z[n..].to_vec();
    let mut z_lower = dual.z;
    z_lower.truncate(n);
    to_json(&KnapsackBound {
        bound: dual.bound,
        z_lower,
        z_upper,
        optimum: opt.value,
        y_star: opt.y,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn project(cone: &str, mode: &str, x: &[f64]) -> Result<String, JsError> {
    project_json(cone, mode, x).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn prodplan_curve(d: &[f64], f: &[f64], r: &[f64], b: f64, samples: usize) -> Result<String, JsError> {
    prodplan_curve_json(d, f, r, b, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn knapsack_bound(p: &[f64], w: &[f64], b: &[f64], y: &[f64]) -> Result<String, JsError> {
    knapsack_bound_json(p, w, b, y).map_err(|e| JsError::new(&e))
}
