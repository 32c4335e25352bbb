//! Closed-form F-madogram of max-stable, inverse max-stable, and max-mixture
//! pairs, plus the pairwise max CDF it integrates.
//!
//! The F-madogram of a pair (Z1, Z2) with common margin F is
//! nu = E|F(Z1) - F(Z2)| / 2. For a max-mixture pair it has a closed form in
//! (a, Theta_X(h), eta_Y(h)) involving one beta function; `madogram_mm_oracle`
//! recomputes it by direct quadrature of the max CDF as a cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::special::log_beta;

/// Weight below which the mixture dispatches to a pure endpoint formula.
const ENDPOINT_TOL: f64 = 1e-9;

/// One point of a theoretical madogram curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadogramPoint {
    pub h: f64,
    pub nu: f64,
}

fn validate_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && (1.0..=2.0).contains(&theta)) {
        return Err(Error::Domain(format!(
            "extremal coefficient must lie in [1, 2], got {theta}"
        )));
    }
    Ok(())
}

fn validate_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!(
            "tail coefficient eta must lie in (0, 1], got {eta}"
        )));
    }
    Ok(())
}

fn validate_a(a: f64) -> Result<()> {
    if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
        return Err(Error::Domain(format!(
            "mixing weight a must lie in [0, 1], got {a}"
        )));
    }
    Ok(())
}

/// F-madogram of a max-stable pair with extremal coefficient theta:
/// nu = (theta - 1) / (2 (theta + 1)), in [0, 1/6].
pub fn madogram_ms(theta: f64) -> Result<f64> {
    validate_theta(theta)?;
    Ok((theta - 1.0) / (2.0 * (theta + 1.0)))
}

/// F-madogram of an inverse max-stable pair with tail coefficient eta:
/// nu = (1 - eta) / (2 (1 + eta)), in [0, 1/6] for eta >= 1/2.
pub fn madogram_ims(eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    Ok((1.0 - eta) / (2.0 * (1.0 + eta)))
}

/// Extremal coefficient recovered from a max-stable madogram value:
/// theta = (1 + 2 nu) / (1 - 2 nu).
pub fn extremal_from_madogram(nu: f64) -> Result<f64> {
    if !(nu.is_finite() && (0.0..=1.0 / 6.0 + 1e-12).contains(&nu)) {
        return Err(Error::Domain(format!(
            "max-stable madogram must lie in [0, 1/6], got {nu}"
        )));
    }
    Ok((1.0 + 2.0 * nu) / (1.0 - 2.0 * nu))
}

/// Closed-form F-madogram of a max-mixture pair.
///
/// `theta` is the extremal coefficient of the X part at the pair's distance,
/// `eta` the tail coefficient of the Y part. Weights within 1e-9 of an
/// endpoint dispatch to the pure formulas.
pub fn madogram_mm(a: f64, theta: f64, eta: f64) -> Result<f64> {
    validate_a(a)?;
    validate_theta(theta)?;
    validate_eta(eta)?;
    if a >= 1.0 - ENDPOINT_TOL {
        return madogram_ms(theta);
    }
    if a <= ENDPOINT_TOL {
        return madogram_ims(eta);
    }
    let cap_a = a * theta;
    let b = 1.0 - a;
    let m = 1.0 / eta;
    let t1 = a * (theta - 1.0) / (a * (theta - 1.0) + 2.0);
    let t2 = (cap_a - 1.0) / (2.0 * cap_a + 2.0);
    let log_t3 = m.ln() - (cap_a + b * m + 1.0).ln() + log_beta((cap_a + 1.0) / b, m)?;
    Ok(t1 - t2 - log_t3.exp())
}

/// CDF of max(F(Z1), F(Z2)) on uniform scale:
/// F_M(u) = u^(a theta) (2 u^(1-a) - 1 + (1 - u^(1-a))^(1/eta)).
pub fn cdf_max_pair(u: f64, a: f64, theta: f64, eta: f64) -> Result<f64> {
    validate_a(a)?;
    validate_theta(theta)?;
    validate_eta(eta)?;
    if !(u.is_finite() && (0.0..=1.0).contains(&u)) {
        return Err(Error::Domain(format!("u must lie in [0, 1], got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let b = 1.0 - a;
    let lnu = u.ln();
    let ub = (b * lnu).exp();
    let one_minus_ub = -(b * lnu).exp_m1();
    Ok((a * theta * lnu).exp() * (2.0 * ub - 1.0 + one_minus_ub.powf(1.0 / eta)))
}

/// F-madogram recomputed by quadrature of the max CDF:
/// nu = int_0^1 (1 - F_M(u)) du - 1/2.
pub fn madogram_mm_oracle(a: f64, theta: f64, eta: f64) -> Result<f64> {
    validate_a(a)?;
    validate_theta(theta)?;
    validate_eta(eta)?;
    let integral = integrate(
        |u| 1.0 - cdf_max_pair(u, a, theta, eta).unwrap_or(f64::NAN),
        0.0,
        1.0,
        1e-12,
    )?;
    Ok(integral - 0.5)
}

/// Theoretical madogram curve of a max-mixture model along a distance grid.
pub fn madogram_curve(
    spec: &crate::models::ModelSpec,
    grid: &[f64],
) -> Result<Vec<MadogramPoint>> {
    let profile = crate::models::dependence_profile(spec, grid)?;
    Ok(profile
        .distances
        .iter()
        .zip(profile.nu_f.iter())
        .map(|(&h, &nu)| MadogramPoint { h, nu })
        .collect())
}
