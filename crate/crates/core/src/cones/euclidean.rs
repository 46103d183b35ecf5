use super::{rsoc_rotate, smat, svec, ConeSpec};
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, sym_eigen};

/// Nearest point of the cone in the Euclidean norm.
///
/// Only cones with closed-form projections are supported; the exponential
/// and power cones (and their duals) return [`Error::Unsupported`].
pub fn project_euclidean(k: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    k.validate()?;
    check_len("euclidean projection", k.dim(), x.len())?;
    match *k {
        ConeSpec::Nonneg { .. } => Ok(x.iter().map(|v| v.max(0.0)).collect()),
        ConeSpec::Nonpos { .. } => Ok(x.iter().map(|v| v.min(0.0)).collect()),
        ConeSpec::Soc { .. } => Ok(project_soc(x)),
        ConeSpec::Rsoc { .. } => Ok(rsoc_rotate(&project_soc(&rsoc_rotate(x)))),
        ConeSpec::Psd { n } => {
            let eig = sym_eigen(&smat(n, x));
            Ok(svec(&eig.reconstruct_with(|l| l.max(0.0))))
        }
        ConeSpec::Exp | ConeSpec::DualExp | ConeSpec::Power { .. } | ConeSpec::DualPower { .. } => {
            Err(Error::Unsupported(format!(
                "no closed-form Euclidean projection onto {k}; use the radial projection"
            )))
        }
    }
}

fn project_soc(x: &[f64]) -> Vec<f64> {
    let t = x[0];
    let delta = norm2(&x[1..]);
    if t >= delta {
        x.to_vec()
    } else if t <= -delta {
        vec![0.0; x.len()]
    } else {
        let scale = (t + delta) / (2.0 * delta);
        let mut out = Vec::with_capacity(x.len());
        out.push(scale * delta);
        out.extend(x[1..].iter().map(|v| scale * v));
        out
    }
}

/// Splits `x = p − q` with `p = Π_K(x)`, `q ∈ K*` and `pᵀq = 0`.
pub fn moreau_decompose(k: &ConeSpec, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = project_euclidean(k, x)?;
    let q = p.iter().zip(x).map(|(pi, xi)| pi - xi).collect();
    Ok((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::contains;
    use crate::linalg::dot;

    #[test]
    fn orthant_is_relu() {
        let p = project_euclidean(&ConeSpec::nonneg(3), &[1.0, -2.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn soc_three_cases() {
        let k = ConeSpec::soc(3);
        let p = project_euclidean(&k, &[0.0, 3.0, 4.0]).unwrap();
        let expect = [2.5, 1.5, 2.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(project_euclidean(&k, &[6.0, 3.0, 4.0]).unwrap(), vec![6.0, 3.0, 4.0]);
        assert_eq!(project_euclidean(&k, &[-6.0, 3.0, 4.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn soc_projection_is_nearest_on_a_grid() {
        // brute-force check over the boundary parametrization (r, r cos θ, r sin θ)
        let x = [0.0, 3.0, 4.0];
        let p = project_euclidean(&ConeSpec::soc(3), &x).unwrap();
        let d_proj: f64 = p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
        let mut best = f64::INFINITY;
        for ri in 0..=400 {
            let r = ri as f64 * 0.02;
            for ti in 0..720 {
                let th = ti as f64 * std::f64::consts::PI / 360.0;
                let c = [r, r * th.cos(), r * th.sin()];
                let d: f64 = c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum();
                best = best.min(d);
            }
        }
        assert!(d_proj <= best + 1e-12);
        assert!((d_proj - best).abs() < 1e-3);
    }

    #[test]
    fn psd_clips_eigenvalues() {
        let p = project_euclidean(&ConeSpec::psd(2), &[1.0, 0.0, -2.0]).unwrap();
        for (a, b) in p.iter().zip([1.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_and_power_are_unsupported() {
        for k in [ConeSpec::Exp, ConeSpec::DualExp, ConeSpec::power(0.3)] {
            assert!(matches!(
                project_euclidean(&k, &[1.0, 1.0, 1.0]),
                Err(Error::Unsupported(_))
            ));
            assert!(moreau_decompose(&k, &[1.0, 1.0, 1.0]).is_err());
        }
    }

    #[test]
    fn moreau_examples() {
        let k = ConeSpec::soc(3);
        let (p, q) = moreau_decompose(&k, &[0.0, 3.0, 4.0]).unwrap();
        for (a, b) in q.iter().zip([2.5, -1.5, -2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(dot(&p, &q).abs() < 1e-12);

        let inside = [5.0, 1.0, 2.0];
        let (p, q) = moreau_decompose(&k, &inside).unwrap();
        assert_eq!(p, inside.to_vec());
        assert_eq!(q, vec![0.0; 3]);

        let polar = [-5.0, 1.0, 2.0];
        let (p, q) = moreau_decompose(&k, &polar).unwrap();
        assert_eq!(p, vec![0.0; 3]);
        assert_eq!(q, vec![5.0, -1.0, -2.0]);
        assert!(contains(&k.dual(), &q, 1e-12).unwrap());
    }

    #[test]
    fn rsoc_projection_lands_in_cone() {
        let k = ConeSpec::rsoc(4);
        let p = project_euclidean(&k, &[-1.0, 2.0, 3.0, -0.5]).unwrap();
        assert!(contains(&k, &p, 1e-12).unwrap());
    }
}
