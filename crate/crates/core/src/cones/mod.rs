//! Standard proper cones: membership, duals, Euclidean and radial
//! projections, Moreau decomposition, and vector-Jacobian products of the
//! radial projections.
//!
//! Points are flat `f64` slices. PSD points use the scaled upper-triangle
//! layout described in [`svec`]: row-major over `i <= j`, off-diagonal
//! entries multiplied by `√2`, so the plain dot product of two packed points
//! equals the trace inner product of the matrices.

mod euclidean;
mod membership;
mod radial;
mod spec;

pub use euclidean::{moreau_decompose, project_euclidean};
pub use membership::{contains, membership_slack};
pub use radial::{
    project_dual_radial, project_radial, radial_projection, radial_ray, radial_vjp,
    RadialProjection,
};
pub use spec::ConeSpec;

use crate::linalg::SymMatrix;

/// Packs a symmetric matrix into the scaled upper-triangle layout.
pub fn svec(x: &SymMatrix) -> Vec<f64> {
    let n = x.order();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(x.get(i, i));
        for j in (i + 1)..n {
            out.push(x.get(i, j) * std::f64::consts::SQRT_2);
        }
    }
    out
}

/// Inverse of [`svec`]. `x.len()` must equal `n(n+1)/2`.
pub fn smat(n: usize, x: &[f64]) -> SymMatrix {
    debug_assert_eq!(x.len(), n * (n + 1) / 2);
    let mut data = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        data[i * n + i] = x[k];
        k += 1;
        for j in (i + 1)..n {
            let v = x[k] / std::f64::consts::SQRT_2;
            data[i * n + j] = v;
            data[j * n + i] = v;
            k += 1;
        }
    }
    SymMatrix::new(n, data).expect("smat builds an exactly symmetric finite matrix")
}

/// Positions of the diagonal entries inside a packed PSD point of order `n`.
pub(crate) fn svec_diag_positions(n: usize) -> impl Iterator<Item = usize> {
    (0..n).scan(0usize, move |pos, i| {
        let here = *pos;
        *pos += n - i;
        Some(here)
    })
}

/// Orthogonal involution between RSOC and SOC coordinates:
/// `(x₁, x₂, tail) ↦ ((x₁+x₂)/√2, (x₁−x₂)/√2, tail)`.
pub(crate) fn rsoc_rotate(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    out[0] = s * (x[0] + x[1]);
    out[1] = s * (x[0] - x[1]);
    out
}
