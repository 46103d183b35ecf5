use super::{rsoc_rotate, smat, ConeSpec};
use crate::error::{check_len, Result};
use crate::linalg::{lambda_min, norm2};

/// Signed slack of the defining inequalities: nonnegative iff `x` is in the
/// cone. Degree-one homogeneous for the symmetric cones.
pub fn membership_slack(k: &ConeSpec, x: &[f64]) -> Result<f64> {
    k.validate()?;
    check_len("cone membership", k.dim(), x.len())?;
    Ok(match *k {
        ConeSpec::Nonneg { .. } => x.iter().copied().fold(f64::INFINITY, f64::min),
        ConeSpec::Nonpos { .. } => x.iter().map(|v| -v).fold(f64::INFINITY, f64::min),
        ConeSpec::Soc { .. } => soc_slack(x),
        ConeSpec::Rsoc { .. } => soc_slack(&rsoc_rotate(x)),
        ConeSpec::Psd { n } => lambda_min(&smat(n, x)),
        ConeSpec::Exp => exp_slack(x),
        ConeSpec::DualExp => dual_exp_slack(x),
        ConeSpec::Power { alpha } => power_slack(alpha, x[0], x[1], x[2]),
        ConeSpec::DualPower { alpha } => {
            power_slack(alpha, x[0] / alpha, x[1] / (1.0 - alpha), x[2])
        }
    })
}

/// True iff the slack is at least `−tol·(1 + ‖x‖)`.
pub fn contains(k: &ConeSpec, x: &[f64], tol: f64) -> Result<bool> {
    let slack = membership_slack(k, x)?;
    Ok(slack >= -tol * (1.0 + norm2(x)))
}

fn soc_slack(x: &[f64]) -> f64 {
    x[0] - norm2(&x[1..])
}

// x₂ ln(x₁/x₂) − x₃ on the open part; the closure {x₁ ≥ 0, x₂ = 0, x₃ ≤ 0}
// is handled separately.
fn exp_slack(x: &[f64]) -> f64 {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    if x2 > 0.0 {
        if x1 > 0.0 {
            x2 * (x1 / x2).ln() - x3
        } else {
            x1 - x2 * (x3 / x2).min(700.0).exp()
        }
    } else {
        x2.min(x1).min(-x3)
    }
}

// y₂ − y₃ − y₃ ln(y₁/(−y₃)) on the open part; the closure is
// {y₁ ≥ 0, y₂ ≥ 0, y₃ = 0}.
fn dual_exp_slack(y: &[f64]) -> f64 {
    let (y1, y2, y3) = (y[0], y[1], y[2]);
    if y3 < 0.0 {
        if y1 > 0.0 {
            y2 - y3 - y3 * (y1 / -y3).ln()
        } else {
            y1 - (-y3) * ((y2 / y3) - 1.0).min(700.0).exp()
        }
    } else {
        (-y3).min(y1).min(y2)
    }
}

fn power_slack(alpha: f64, x1: f64, x2: f64, x3: f64) -> f64 {
    if x1 < 0.0 || x2 < 0.0 {
        return x1.min(x2);
    }
    x1.powf(alpha) * x2.powf(1.0 - alpha) - x3.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_and_outside_points() {
        assert!(contains(&ConeSpec::soc(3), &[5.0, 3.0, 4.0], 1e-9).unwrap());
        assert!(!contains(&ConeSpec::soc(3), &[4.9, 3.0, 4.0], 1e-9).unwrap());
        assert!(!contains(&ConeSpec::nonneg(2), &[1.0, -0.1], 1e-9).unwrap());
        assert!(contains(&ConeSpec::nonpos(2), &[-1.0, 0.0], 0.0).unwrap());
        // 1 >= 1·e⁰
        assert!(contains(&ConeSpec::Exp, &[1.0, 1.0, 0.0], 1e-9).unwrap());
        assert!(!contains(&ConeSpec::Exp, &[1.0, 1.0, 0.01], 1e-9).unwrap());
    }

    #[test]
    fn exp_closure() {
        assert!(contains(&ConeSpec::Exp, &[2.0, 0.0, -1.0], 0.0).unwrap());
        assert!(!contains(&ConeSpec::Exp, &[2.0, 0.0, 1.0], 1e-9).unwrap());
        assert!(!contains(&ConeSpec::Exp, &[-1.0, 1.0, -5.0], 1e-9).unwrap());
    }

    #[test]
    fn dual_exp_points() {
        // -y1/y3 >= exp(y2/y3 - 1) with (1, 5, -1): 1 >= e^{-6}
        assert!(contains(&ConeSpec::DualExp, &[1.0, 5.0, -1.0], 0.0).unwrap());
        // boundary: y2 = y3 + y3 ln(y1/(-y3)) = -1
        assert!(contains(&ConeSpec::DualExp, &[1.0, -1.0, -1.0], 1e-12).unwrap());
        assert!(!contains(&ConeSpec::DualExp, &[1.0, -1.1, -1.0], 1e-9).unwrap());
        assert!(contains(&ConeSpec::DualExp, &[1.0, 2.0, 0.0], 0.0).unwrap());
    }

    #[test]
    fn rsoc_definition() {
        // 2·x1·x2 >= x3²: (1, 2, 2) is on the boundary
        assert!(contains(&ConeSpec::rsoc(3), &[1.0, 2.0, 2.0], 1e-12).unwrap());
        assert!(!contains(&ConeSpec::rsoc(3), &[1.0, 2.0, 2.1], 1e-9).unwrap());
        assert!(!contains(&ConeSpec::rsoc(3), &[-1.0, -2.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn power_and_dual_power() {
        let p = ConeSpec::power(0.5);
        assert!(contains(&p, &[4.0, 1.0, 2.0], 1e-12).unwrap());
        assert!(!contains(&p, &[3.9, 1.0, 2.0], 1e-9).unwrap());
        let d = p.dual();
        // (y1/α, y2/(1−α), y3) = (4, 1, 2) on the boundary
        assert!(contains(&d, &[2.0, 0.5, 2.0], 1e-12).unwrap());
        assert!(!contains(&d, &[1.9, 0.5, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn psd_membership() {
        // diag(1, -2) packed
        assert!(!contains(&ConeSpec::psd(2), &[1.0, 0.0, -2.0], 1e-9).unwrap());
        assert!(contains(&ConeSpec::psd(2), &[1.0, 0.0, 0.0], 1e-12).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(contains(&ConeSpec::soc(3), &[1.0, 0.0], 1e-9).is_err());
    }
}
