//! Max-stable families, the inverse max-stable transform, and max-mixture
//! dependence summaries.
//!
//! All margins are unit Frechet, F(x) = exp(-1/x). A max-mixture process is
//! Z(s) = max(aX(s), (1-a)Y(s)) with X max-stable (asymptotically dependent)
//! and Y inverse max-stable (asymptotically independent). Its bivariate CDF
//! factors into an X part, exp(-a V_X(z1, z2)), and a Y part expressed
//! through the inverse transform g.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::norm_cdf;

/// Spatial correlation function for the Gaussian drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrelationFn {
    /// rho(h) = exp(-h / theta)
    Exponential { theta: f64 },
}

impl CorrelationFn {
    /// Correlation at distance h.
    pub fn value(&self, h: f64) -> f64 {
        match self {
            CorrelationFn::Exponential { theta } => (-h / theta).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CorrelationFn::Exponential { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(Error::Domain(format!(
                        "correlation range theta must be positive, got {theta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Bounded exponential variogram gamma(h) = sigma2 (1 - exp(-h / theta)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variogram {
    pub sigma2: f64,
    pub theta: f64,
}

impl Variogram {
    pub fn value(&self, h: f64) -> f64 {
        self.sigma2 * (-(-h / self.theta).exp_m1())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::Domain(format!(
                "variogram sill sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::Domain(format!(
                "variogram range theta must be positive, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Stationary isotropic max-stable process family on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxStableFamily {
    /// Gaussian storm profiles with covariance sigma * I; tau(h) = h / sqrt(sigma).
    Smith { sigma: f64 },
    /// Variogram-driven family with gamma(h) = sigma2 (1 - exp(-h / theta)).
    BrownResnick { sigma2: f64, theta: f64 },
    /// Truncated extremal Gaussian: disk of radius r times a correlated
    /// Gaussian sign-truncated field.
    Teg { corr: CorrelationFn, r: f64 },
}

impl MaxStableFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            MaxStableFamily::Smith { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::Domain(format!(
                        "Smith sigma must be positive, got {sigma}"
                    )));
                }
            }
            MaxStableFamily::BrownResnick { sigma2, theta } => {
                Variogram { sigma2: *sigma2, theta: *theta }.validate()?;
            }
            MaxStableFamily::Teg { corr, r } => {
                corr.validate()?;
                if !(r.is_finite() && *r > 0.0) {
                    return Err(Error::Domain(format!(
                        "Teg disk radius must be positive, got {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dependence scale tau(h) for the Smith / Brown-Resnick exponent form,
    /// None for Teg.
    pub(crate) fn tau(&self, h: f64) -> Option<f64> {
        match self {
            MaxStableFamily::Smith { sigma } => Some(h / sigma.sqrt()),
            MaxStableFamily::BrownResnick { sigma2, theta } => {
                let gamma = Variogram { sigma2: *sigma2, theta: *theta }.value(h);
                Some((2.0 * gamma).sqrt())
            }
            MaxStableFamily::Teg { .. } => None,
        }
    }
}

/// Fraction of a disk of radius r covered by its copy shifted by h
/// (normalized lens area); zero beyond h = 2r.
pub fn disk_overlap(h: f64, r: f64) -> f64 {
    let t = h / (2.0 * r);
    if t >= 1.0 {
        return 0.0;
    }
    std::f64::consts::FRAC_2_PI * (t.acos() - t * (1.0 - t * t).sqrt())
}

fn validate_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::Domain(format!("distance h must be >= 0, got {h}")));
    }
    Ok(())
}

fn validate_coord(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// Pairwise extremal coefficient Theta(h) = V_h(1, 1), in [1, 2].
pub fn extremal_coefficient(family: &MaxStableFamily, h: f64) -> Result<f64> {
    family.validate()?;
    validate_h(h)?;
    let theta = match family {
        MaxStableFamily::Teg { corr, r } => {
            let alpha = disk_overlap(h, *r);
            let rho = corr.value(h);
            2.0 - alpha * (1.0 - ((1.0 - rho) / 2.0).sqrt())
        }
        _ => 2.0 * norm_cdf(family.tau(h).unwrap() / 2.0),
    };
    Ok(theta.clamp(1.0, 2.0))
}

/// Tail dependence coefficient eta(h) = 1 / Theta(h) of the inverse
/// max-stable process built from `family`, in [1/2, 1].
pub fn tail_dependence_eta(family: &MaxStableFamily, h: f64) -> Result<f64> {
    Ok(1.0 / extremal_coefficient(family, h)?)
}

/// Smith / Brown-Resnick bivariate exponent with dependence scale tau:
/// V = Phi(w1)/x1 + Phi(w2)/x2, w1 = tau/2 + ln(x2/x1)/tau, w2 = tau - w1.
fn smith_form_v(tau: f64, x1: f64, x2: f64) -> f64 {
    if tau < 1e-12 {
        // complete dependence
        return 1.0 / x1.min(x2);
    }
    let w1 = 0.5 * tau + (x2 / x1).ln() / tau;
    let w2 = tau - w1;
    norm_cdf(w1) / x1 + norm_cdf(w2) / x2
}

fn teg_v(alpha: f64, rho: f64, x1: f64, x2: f64) -> f64 {
    let s = x1 + x2;
    let q = (1.0 - 2.0 * (rho + 1.0) * x1 * x2 / (s * s)).max(0.0);
    (1.0 / x1 + 1.0 / x2) * (1.0 - 0.5 * alpha * (1.0 - q.sqrt()))
}

/// Bivariate exponent measure V_h(x1, x2) of a max-stable family.
pub fn exponent_measure_v(family: &MaxStableFamily, h: f64, x1: f64, x2: f64) -> Result<f64> {
    family.validate()?;
    validate_h(h)?;
    validate_coord("x1", x1)?;
    validate_coord("x2", x2)?;
    Ok(exponent_measure_v_unchecked(family, h, x1, x2))
}

pub(crate) fn exponent_measure_v_unchecked(
    family: &MaxStableFamily,
    h: f64,
    x1: f64,
    x2: f64,
) -> f64 {
    match family {
        MaxStableFamily::Teg { corr, r } => {
            teg_v(disk_overlap(h, *r), corr.value(h), x1, x2)
        }
        _ => smith_form_v(family.tau(h).unwrap(), x1, x2),
    }
}

/// Bivariate CDF exp(-V_h(z1, z2)) of a max-stable pair.
pub fn bivariate_cdf_ms(family: &MaxStableFamily, h: f64, z1: f64, z2: f64) -> Result<f64> {
    Ok((-exponent_measure_v(family, h, z1, z2)?).exp())
}

/// Inverse max-stable marginal transform at scale s:
/// g_s(z) = -1 / ln(1 - exp(-s / z)).
///
/// Decreasing bijection of (0, inf); at scale 1 it is an involution with
/// fixed point 1 / ln 2.
pub fn inverse_transform_g(z: f64, scale: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Domain(format!("g requires z > 0, got {z}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!("g requires scale > 0, got {scale}")));
    }
    Ok(inverse_transform_g_unchecked(z, scale))
}

pub(crate) fn inverse_transform_g_unchecked(z: f64, scale: f64) -> f64 {
    let e = scale / z;
    // L = ln(1 - exp(-e)) through whichever side keeps full precision
    let l = if e > std::f64::consts::LN_2 {
        (-(-e).exp()).ln_1p()
    } else {
        (-(-e).exp_m1()).ln()
    };
    -1.0 / l
}

/// Max-mixture model: Z = max(aX, (1-a)Y) with X max-stable and Y inverse
/// max-stable, both unit Frechet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Mixing weight in [0, 1]; a = 1 is pure max-stable, a = 0 pure inverse.
    pub a: f64,
    /// Family of the max-stable part X; unused (may be None) when a = 0.
    pub x_family: Option<MaxStableFamily>,
    /// Family whose inversion gives Y; unused (may be None) when a = 1.
    pub y_family: Option<MaxStableFamily>,
}

impl ModelSpec {
    pub fn new(
        a: f64,
        x_family: Option<MaxStableFamily>,
        y_family: Option<MaxStableFamily>,
    ) -> Result<Self> {
        let spec = ModelSpec { a, x_family, y_family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && (0.0..=1.0).contains(&self.a)) {
            return Err(Error::Domain(format!(
                "mixing weight a must lie in [0, 1], got {}",
                self.a
            )));
        }
        if self.a > 0.0 && self.x_family.is_none() {
            return Err(Error::Domain(
                "a > 0 requires a max-stable x_family".into(),
            ));
        }
        if self.a < 1.0 && self.y_family.is_none() {
            return Err(Error::Domain(
                "a < 1 requires a y_family to invert".into(),
            ));
        }
        if let Some(f) = &self.x_family {
            f.validate()?;
        }
        if let Some(f) = &self.y_family {
            f.validate()?;
        }
        Ok(())
    }

    pub(crate) fn x(&self) -> &MaxStableFamily {
        self.x_family.as_ref().expect("validated: x_family present")
    }

    pub(crate) fn y(&self) -> &MaxStableFamily {
        self.y_family.as_ref().expect("validated: y_family present")
    }
}

/// Bivariate CDF of the inverse max-stable pair at full weight:
/// F(z1) + F(z2) - 1 + exp(-V_Y(g(z1), g(z2))) with g at scale `scale`.
fn inverse_pair_cdf(family: &MaxStableFamily, h: f64, scale: f64, z1: f64, z2: f64) -> f64 {
    let f1 = (-scale / z1).exp();
    let f2 = (-scale / z2).exp();
    let g1 = inverse_transform_g_unchecked(z1, scale);
    let g2 = inverse_transform_g_unchecked(z2, scale);
    let v = exponent_measure_v_unchecked(family, h, g1, g2);
    // f1 + f2 - 1 + exp(-v), arranged so the near-cancellation at small z
    // happens between same-magnitude terms
    f1 + f2 - (-(-v).exp_m1())
}

/// Bivariate CDF G_h(z1, z2) of the max-mixture pair at distance h.
///
/// The endpoints dispatch to the pure formulas: a = 1 gives exp(-V_X) and
/// a = 0 gives the inverse pair CDF at scale 1.
pub fn bivariate_cdf_mm(spec: &ModelSpec, h: f64, z1: f64, z2: f64) -> Result<f64> {
    spec.validate()?;
    validate_h(h)?;
    validate_coord("z1", z1)?;
    validate_coord("z2", z2)?;
    if spec.a == 1.0 {
        return Ok((-exponent_measure_v_unchecked(spec.x(), h, z1, z2)).exp());
    }
    if spec.a == 0.0 {
        return clamp_probability(inverse_pair_cdf(spec.y(), h, 1.0, z1, z2));
    }
    let x_part = (-spec.a * exponent_measure_v_unchecked(spec.x(), h, z1, z2)).exp();
    let y_part = inverse_pair_cdf(spec.y(), h, 1.0 - spec.a, z1, z2);
    clamp_probability(x_part * y_part)
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::Numeric(format!(
            "bivariate CDF escaped [0, 1] beyond rounding: {p}"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Upper tail dependence chi(h) = a (2 - Theta_X(h)).
pub fn chi(spec: &ModelSpec, h: f64) -> Result<f64> {
    spec.validate()?;
    validate_h(h)?;
    if spec.a == 0.0 {
        return Ok(0.0);
    }
    Ok(spec.a * (2.0 - extremal_coefficient(spec.x(), h)?))
}

/// Residual tail dependence chi-bar(h): 1 inside the asymptotic-dependence
/// range (chi > 0), 2 eta_Y(h) - 1 beyond it.
pub fn chibar(spec: &ModelSpec, h: f64) -> Result<f64> {
    if chi(spec, h)? > 0.0 {
        return Ok(1.0);
    }
    match &spec.y_family {
        Some(y) if spec.a < 1.0 => Ok(2.0 * tail_dependence_eta(y, h)? - 1.0),
        // pure max-stable beyond its dependence range: exact independence
        _ => Ok(0.0),
    }
}

/// Supremum of the asymptotic-dependence range, sup{h : chi(h) > 0}.
///
/// Zero when a = 0, 2r for a Teg X part, infinite otherwise.
pub fn ad_range(spec: &ModelSpec) -> Result<f64> {
    spec.validate()?;
    if spec.a == 0.0 {
        return Ok(0.0);
    }
    Ok(match spec.x() {
        MaxStableFamily::Teg { r, .. } => 2.0 * r,
        _ => f64::INFINITY,
    })
}

/// Dependence summaries of a max-mixture model along a distance grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceProfile {
    pub distances: Vec<f64>,
    /// Extremal coefficient of the X part (1 when a = 0).
    pub theta_x: Vec<f64>,
    /// Tail dependence coefficient of Z: 1 inside the AD range, eta_Y beyond.
    pub eta_y: Vec<f64>,
    pub chi: Vec<f64>,
    pub chibar: Vec<f64>,
    /// Theoretical F-madogram.
    pub nu_f: Vec<f64>,
}

/// Evaluate theta, eta, chi, chi-bar, and the F-madogram along `grid`.
pub fn dependence_profile(spec: &ModelSpec, grid: &[f64]) -> Result<DependenceProfile> {
    spec.validate()?;
    let n = grid.len();
    let mut out = DependenceProfile {
        distances: grid.to_vec(),
        theta_x: Vec::with_capacity(n),
        eta_y: Vec::with_capacity(n),
        chi: Vec::with_capacity(n),
        chibar: Vec::with_capacity(n),
        nu_f: Vec::with_capacity(n),
    };
    for &h in grid {
        validate_h(h)?;
        let theta = match &spec.x_family {
            Some(x) if spec.a > 0.0 => extremal_coefficient(x, h)?,
            _ => 1.0,
        };
        let chi_h = spec.a * (2.0 - theta);
        let eta_y = match &spec.y_family {
            Some(y) if spec.a < 1.0 => tail_dependence_eta(y, h)?,
            _ => 0.5,
        };
        // effective tail coefficient of Z
        let eta = if chi_h > 0.0 { 1.0 } else { eta_y };
        out.theta_x.push(theta);
        out.eta_y.push(eta);
        out.chi.push(chi_h);
        out.chibar.push(if chi_h > 0.0 { 1.0 } else { 2.0 * eta - 1.0 });
        out.nu_f
            .push(crate::madogram::madogram_mm(spec.a, theta, eta_y)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smith(sigma: f64) -> MaxStableFamily {
        MaxStableFamily::Smith { sigma }
    }

    fn teg(theta: f64, r: f64) -> MaxStableFamily {
        MaxStableFamily::Teg { corr: CorrelationFn::Exponential { theta }, r }
    }

    #[test]
    fn smith_extremal_coefficient_reference() {
        let got = extremal_coefficient(&smith(1.0), 2.0).unwrap();
        assert!((got - 1.6826894921370859).abs() < 1e-14);
        let got = extremal_coefficient(&smith(0.6), 1.0).unwrap();
        assert!((got - 1.4813949835712744).abs() < 1e-14);
    }

    #[test]
    fn brown_resnick_extremal_coefficient_reference() {
        let fam = MaxStableFamily::BrownResnick { sigma2: 1.0, theta: 1.0 };
        let got = extremal_coefficient(&fam, 1.0).unwrap();
        assert!((got - 1.4260150518480169).abs() < 1e-14);
    }

    #[test]
    fn teg_extremal_coefficient_reference() {
        let fam = teg(0.2, 0.25);
        for (h, want) in [
            (0.1, 1.5842967922251611),
            (0.3, 1.8927165188119019),
            (0.45, 1.9876179266560243),
        ] {
            let got = extremal_coefficient(&fam, h).unwrap();
            assert!((got - want).abs() < 1e-14, "theta_teg({h}) = {got}");
        }
        // exact independence from 2r on
        assert_eq!(extremal_coefficient(&fam, 0.5).unwrap(), 2.0);
        assert_eq!(extremal_coefficient(&fam, 3.0).unwrap(), 2.0);
    }

    #[test]
    fn disk_overlap_endpoints() {
        assert_eq!(disk_overlap(0.0, 0.25), 1.0);
        assert_eq!(disk_overlap(0.5, 0.25), 0.0);
        let got = disk_overlap(0.1, 0.25);
        assert!((got - 0.74706007810466196).abs() < 1e-14);
    }

    #[test]
    fn extremal_coefficient_limits() {
        let br = MaxStableFamily::BrownResnick { sigma2: 0.7, theta: 1.3 };
        for fam in [smith(2.0), br.clone(), teg(0.2, 0.25)] {
            assert!((extremal_coefficient(&fam, 0.0).unwrap() - 1.0).abs() < 1e-12);
        }
        // Smith reaches independence in the limit
        let far = extremal_coefficient(&smith(2.0), 1e6).unwrap();
        assert!(far <= 2.0 && far > 1.99);
        // a bounded variogram saturates strictly below independence
        let far = extremal_coefficient(&br, 1e6).unwrap();
        let sill = 2.0 * crate::special::norm_cdf(0.5 * (2.0_f64 * 0.7).sqrt());
        assert!(far < 2.0);
        assert!((far - sill).abs() < 1e-12);
        // disk overlap hits exact independence at finite range
        assert_eq!(extremal_coefficient(&teg(0.2, 0.25), 1e6).unwrap(), 2.0);
    }

    #[test]
    fn exponent_measure_reference_values() {
        let got = exponent_measure_v(&smith(1.0), 1.0, 2.0, 3.0).unwrap();
        assert!((got - 0.58791452970299555).abs() < 1e-14);
        let br = MaxStableFamily::BrownResnick { sigma2: 1.0, theta: 1.0 };
        let got = exponent_measure_v(&br, 1.0, 1.3, 3.1).unwrap();
        assert!((got - 0.83366341428448700).abs() < 1e-14);
        let got = exponent_measure_v(&br, 1.0, 1.0, 1.0).unwrap();
        assert!((got - 1.4260150518480169).abs() < 1e-14);
        let fam = teg(0.2, 0.25);
        let got = exponent_measure_v(&fam, 0.1, 2.0, 2.0).unwrap();
        assert!((got - 0.79214839611258054).abs() < 1e-14);
        let got = exponent_measure_v(&fam, 0.1, 1.3, 3.1).unwrap();
        assert!((got - 0.91867763854542367).abs() < 1e-14);
    }

    #[test]
    fn exponent_measure_bounds_and_symmetry() {
        let fams = [smith(1.5), MaxStableFamily::BrownResnick { sigma2: 1.0, theta: 0.8 }, teg(0.3, 0.4)];
        for fam in fams {
            for h in [0.0, 0.05, 0.3, 1.0, 5.0] {
                for (x1, x2) in [(1.0, 1.0), (0.4, 2.0), (3.0, 0.2), (10.0, 10.0)] {
                    let v = exponent_measure_v(&fam, h, x1, x2).unwrap();
                    let lo = (1.0 / x1).max(1.0 / x2);
                    let hi = 1.0 / x1 + 1.0 / x2;
                    assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "V out of bounds: {v}");
                    let vt = exponent_measure_v(&fam, h, x2, x1).unwrap();
                    assert!((v - vt).abs() < 1e-13, "V not symmetric");
                    // homogeneity of order -1
                    let v2 = exponent_measure_v(&fam, h, 2.0 * x1, 2.0 * x2).unwrap();
                    assert!((v2 - 0.5 * v).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn inverse_transform_reference_values() {
        assert!((inverse_transform_g(1.0, 0.5).unwrap() - 1.0720961853649324).abs() < 1e-14);
        assert!((inverse_transform_g(2.0, 1.0).unwrap() - 1.0720961853649324).abs() < 1e-14);
        assert!((inverse_transform_g(0.3, 1.0).unwrap() - 27.528597806069089).abs() < 1e-12);
        assert!((inverse_transform_g(2.0, 0.25).unwrap() - 0.46700807779929923).abs() < 1e-14);
    }

    #[test]
    fn inverse_transform_is_involution_at_scale_one() {
        let fp = 1.4426950408889634; // 1 / ln 2
        assert!((inverse_transform_g(fp, 1.0).unwrap() - fp).abs() < 1e-14);
        for z in [0.05, 0.3, 1.0, 2.0, 7.0, 40.0] {
            let gz = inverse_transform_g(z, 1.0).unwrap();
            let back = inverse_transform_g(gz, 1.0).unwrap();
            assert!(
                ((back - z) / z).abs() < 1e-12,
                "g(g({z})) = {back}"
            );
        }
    }

    #[test]
    fn inverse_transform_is_decreasing() {
        let mut prev = f64::INFINITY;
        for z in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
            let g = inverse_transform_g(z, 0.75).unwrap();
            assert!(g < prev && g > 0.0);
            prev = g;
        }
    }

    #[test]
    fn mixture_cdf_reference_values() {
        let mm1 = ModelSpec::new(0.5, Some(teg(0.2, 0.25)), Some(smith(0.6))).unwrap();
        let got = bivariate_cdf_mm(&mm1, 0.1, 2.0, 2.0).unwrap();
        assert!((got - 0.51297804265175804).abs() < 1e-14);
        let got = bivariate_cdf_mm(&mm1, 0.1, 1.3, 3.1).unwrap();
        assert!((got - 0.43000667173457969).abs() < 1e-14);
        let got = bivariate_cdf_mm(&mm1, 0.7, 2.0, 2.0).unwrap();
        assert!((got - 0.41749159899604408).abs() < 1e-14);

        let mm = ModelSpec::new(0.25, Some(teg(0.2, 0.25)), Some(smith(0.6))).unwrap();
        let got = bivariate_cdf_mm(&mm, 0.3, 1.5, 0.8).unwrap();
        assert!((got - 0.24667821038872366).abs() < 1e-14);

        let inv = ModelSpec::new(0.0, None, Some(smith(0.6))).unwrap();
        let got = bivariate_cdf_mm(&inv, 0.3, 2.0, 2.0).unwrap();
        assert!((got - 0.55402624575578416).abs() < 1e-14);

        let br = MaxStableFamily::BrownResnick { sigma2: 1.0, theta: 0.8 };
        let mm2 = ModelSpec::new(0.5, Some(teg(0.2, 0.25)), Some(br)).unwrap();
        let got = bivariate_cdf_mm(&mm2, 0.4, 2.0, 2.0).unwrap();
        assert!((got - 0.42195528678925899).abs() < 1e-14);
    }

    #[test]
    fn mixture_cdf_pure_max_stable_endpoint() {
        let spec = ModelSpec::new(1.0, Some(smith(1.0)), None).unwrap();
        let got = bivariate_cdf_mm(&spec, 2.0, 1.0, 1.0).unwrap();
        assert!((got - 0.18587339814818440).abs() < 1e-14);
    }

    #[test]
    fn mixture_cdf_is_a_copula_margin() {
        // z2 -> inf recovers the unit Frechet margin of z1
        let mm1 = ModelSpec::new(0.5, Some(teg(0.2, 0.25)), Some(smith(0.6))).unwrap();
        for z1 in [0.5, 1.0, 3.0] {
            let got = bivariate_cdf_mm(&mm1, 0.2, z1, 1e12).unwrap();
            let want = (-1.0 / z1).exp();
            assert!((got - want).abs() < 1e-9, "margin at {z1}: {got} vs {want}");
        }
    }

    #[test]
    fn chi_and_chibar_reference() {
        let spec = ModelSpec::new(1.0, Some(smith(1.0)), None).unwrap();
        assert!((chi(&spec, 2.0).unwrap() - 0.31731050786291410).abs() < 1e-14);
        assert_eq!(chibar(&spec, 2.0).unwrap(), 1.0);

        let inv = ModelSpec::new(0.0, None, Some(smith(0.6))).unwrap();
        assert_eq!(chi(&inv, 1.0).unwrap(), 0.0);
        assert!((chibar(&inv, 1.0).unwrap() - 0.35007882582300777).abs() < 1e-14);
    }

    #[test]
    fn chi_vanishes_beyond_ad_range() {
        let spec = ModelSpec::new(0.5, Some(teg(0.2, 0.25)), Some(smith(0.6))).unwrap();
        assert_eq!(ad_range(&spec).unwrap(), 0.5);
        assert!(chi(&spec, 0.49).unwrap() > 0.0);
        assert_eq!(chi(&spec, 0.5).unwrap(), 0.0);
        assert_eq!(chibar(&spec, 0.49).unwrap(), 1.0);
        let beyond = chibar(&spec, 0.5).unwrap();
        assert!((beyond - 0.59602351811758460).abs() < 1e-14);
    }

    #[test]
    fn profile_matches_reference_table() {
        let spec = ModelSpec::new(0.5, Some(teg(0.2, 0.25)), Some(smith(0.6))).unwrap();
        let grid = [0.0, 0.1, 0.5, 1.0];
        let prof = dependence_profile(&spec, &grid).unwrap();
        let want_theta = [1.0, 1.5842967922251611, 2.0, 2.0];
        let want_chi = [0.5, 0.20785160388741946, 0.0, 0.0];
        let want_nu = [0.0, 0.070980225305837667, 0.12672180544704961, 0.14345063594910544];
        for i in 0..grid.len() {
            assert!((prof.theta_x[i] - want_theta[i]).abs() < 1e-14);
            assert!((prof.chi[i] - want_chi[i]).abs() < 1e-14);
            assert!((prof.nu_f[i] - want_nu[i]).abs() < 1e-13);
        }
        assert_eq!(prof.chibar[0], 1.0);
        assert!((prof.chibar[3] - 0.35007882582300777).abs() < 1e-13);
    }

    #[test]
    fn validation_rejects_inconsistent_specs() {
        assert!(ModelSpec::new(1.5, Some(smith(1.0)), None).is_err());
        assert!(ModelSpec::new(0.5, None, Some(smith(1.0))).is_err());
        assert!(ModelSpec::new(0.5, Some(smith(1.0)), None).is_err());
        assert!(ModelSpec::new(0.5, Some(smith(-1.0)), Some(smith(1.0))).is_err());
        assert!(exponent_measure_v(&smith(1.0), -0.1, 1.0, 1.0).is_err());
        assert!(exponent_measure_v(&smith(1.0), 1.0, 0.0, 1.0).is_err());
        assert!(inverse_transform_g(0.0, 1.0).is_err());
        assert!(inverse_transform_g(1.0, 0.0).is_err());
    }
}
