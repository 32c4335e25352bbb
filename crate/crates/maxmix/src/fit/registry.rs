//! Named fit models: parameter layout, box constraints, and construction of
//! a model spec from a parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::nelder_mead::Bound;
use crate::models::{CorrelationFn, MaxStableFamily, ModelSpec};

/// The fittable model menu.
///
/// Mm* are max-mixtures with a free weight; M1-M4 are pure max-stable
/// (a = 1) and M3/M5 pure inverse max-stable (a = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    /// Truncated disk X + inverted Smith Y: (a, theta_x, r_x, sigma_y).
    Mm1,
    /// Truncated disk X + inverted Brown-Resnick Y:
    /// (a, theta_x, r_x, theta_y, sigma2_y).
    Mm2,
    /// Truncated disk, max-stable only: (theta_x, r_x).
    M1,
    /// Brown-Resnick, max-stable only: (theta_x, sigma2_x).
    M2,
    /// Inverted Brown-Resnick only: (theta_y, sigma2_y).
    M3,
    /// Smith, max-stable only: (sigma_x).
    M4,
    /// Inverted Smith only: (sigma_y).
    M5,
}

impl ModelName {
    pub const ALL: [ModelName; 7] = [
        ModelName::Mm1,
        ModelName::Mm2,
        ModelName::M1,
        ModelName::M2,
        ModelName::M3,
        ModelName::M4,
        ModelName::M5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::Mm1 => "mm1",
            ModelName::Mm2 => "mm2",
            ModelName::M1 => "m1",
            ModelName::M2 => "m2",
            ModelName::M3 => "m3",
            ModelName::M4 => "m4",
            ModelName::M5 => "m5",
        }
    }

    /// Parameter names in the order used by every vector interface.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelName::Mm1 => &["a", "theta_x", "r_x", "sigma_y"],
            ModelName::Mm2 => &["a", "theta_x", "r_x", "theta_y", "sigma2_y"],
            ModelName::M1 => &["theta_x", "r_x"],
            ModelName::M2 => &["theta_x", "sigma2_x"],
            ModelName::M3 => &["theta_y", "sigma2_y"],
            ModelName::M4 => &["sigma_x"],
            ModelName::M5 => &["sigma_y"],
        }
    }

    pub fn dim(&self) -> usize {
        self.param_names().len()
    }

    /// Whether the mixing weight is a free parameter.
    pub fn is_mixture(&self) -> bool {
        matches!(self, ModelName::Mm1 | ModelName::Mm2)
    }

    /// Box constraints scaled to the data's maximum pair distance.
    pub fn bounds(&self, h_ref: f64) -> Result<Vec<Bound>> {
        if !(h_ref.is_finite() && h_ref > 0.0) {
            return Err(Error::Usage(format!(
                "reference distance must be positive, got {h_ref}"
            )));
        }
        let range = Bound::log(1e-3 * h_ref, 20.0 * h_ref);
        let smith_var = Bound::log(1e-6 * h_ref * h_ref, 400.0 * h_ref * h_ref);
        let br_sill = Bound::log(1e-3, 50.0);
        let weight = Bound::linear(0.0, 1.0);
        Ok(match self {
            ModelName::Mm1 => vec![weight, range, range, smith_var],
            ModelName::Mm2 => vec![weight, range, range, range, br_sill],
            ModelName::M1 => vec![range, range],
            ModelName::M2 => vec![range, br_sill],
            ModelName::M3 => vec![range, br_sill],
            ModelName::M4 => vec![smith_var],
            ModelName::M5 => vec![smith_var],
        })
    }

    /// Build the model spec for a parameter vector in this model's layout.
    pub fn build(&self, psi: &[f64]) -> Result<ModelSpec> {
        if psi.len() != self.dim() {
            return Err(Error::Usage(format!(
                "model {} takes {} parameters, got {}",
                self.as_str(),
                self.dim(),
                psi.len()
            )));
        }
        let teg = |theta: f64, r: f64| MaxStableFamily::Teg {
            corr: CorrelationFn::Exponential { theta },
            r,
        };
        match self {
            ModelName::Mm1 => ModelSpec::new(
                psi[0],
                Some(teg(psi[1], psi[2])),
                Some(MaxStableFamily::Smith { sigma: psi[3] }),
            ),
            ModelName::Mm2 => ModelSpec::new(
                psi[0],
                Some(teg(psi[1], psi[2])),
                Some(MaxStableFamily::BrownResnick { sigma2: psi[4], theta: psi[3] }),
            ),
            ModelName::M1 => ModelSpec::new(1.0, Some(teg(psi[0], psi[1])), None),
            ModelName::M2 => ModelSpec::new(
                1.0,
                Some(MaxStableFamily::BrownResnick { sigma2: psi[1], theta: psi[0] }),
                None,
            ),
            ModelName::M3 => ModelSpec::new(
                0.0,
                None,
                Some(MaxStableFamily::BrownResnick { sigma2: psi[1], theta: psi[0] }),
            ),
            ModelName::M4 => {
                ModelSpec::new(1.0, Some(MaxStableFamily::Smith { sigma: psi[0] }), None)
            }
            ModelName::M5 => {
                ModelSpec::new(0.0, None, Some(MaxStableFamily::Smith { sigma: psi[0] }))
            }
        }
    }
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm1" => Ok(ModelName::Mm1),
            "mm2" => Ok(ModelName::Mm2),
            "m1" => Ok(ModelName::M1),
            "m2" => Ok(ModelName::M2),
            "m3" => Ok(ModelName::M3),
            "m4" => Ok(ModelName::M4),
            "m5" => Ok(ModelName::M5),
            other => Err(Error::Usage(format!(
                "unknown model '{other}' (expected one of mm1, mm2, m1, m2, m3, m4, m5)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_through_parsing() {
        for m in ModelName::ALL {
            let parsed: ModelName = m.as_str().parse().unwrap();
            assert_eq!(parsed, m);
        }
        assert!("m9".parse::<ModelName>().is_err());
    }

    #[test]
    fn layout_sizes_agree() {
        for m in ModelName::ALL {
            assert_eq!(m.dim(), m.param_names().len());
            assert_eq!(m.bounds(1.0).unwrap().len(), m.dim());
        }
    }

    #[test]
    fn built_specs_validate_and_use_the_right_parts() {
        let spec = ModelName::Mm1.build(&[0.5, 0.2, 0.25, 0.6]).unwrap();
        assert_eq!(spec.a, 0.5);
        assert!(matches!(spec.x_family, Some(MaxStableFamily::Teg { .. })));
        assert!(matches!(spec.y_family, Some(MaxStableFamily::Smith { .. })));

        let spec = ModelName::M3.build(&[1.0, 0.7]).unwrap();
        assert_eq!(spec.a, 0.0);
        assert!(spec.x_family.is_none());
        assert!(matches!(
            spec.y_family,
            Some(MaxStableFamily::BrownResnick { sigma2, theta })
                if sigma2 == 0.7 && theta == 1.0
        ));

        let spec = ModelName::M4.build(&[2.0]).unwrap();
        assert_eq!(spec.a, 1.0);
        assert!(spec.y_family.is_none());
    }

    #[test]
    fn build_rejects_wrong_arity_and_bad_values() {
        assert!(ModelName::Mm1.build(&[0.5, 0.2]).is_err());
        assert!(ModelName::M4.build(&[-1.0]).is_err());
        assert!(ModelName::Mm1.build(&[1.5, 0.2, 0.25, 0.6]).is_err());
    }

    #[test]
    fn bounds_contain_the_study_truth() {
        let h_ref = 1.4;
        let b = ModelName::Mm1.bounds(h_ref).unwrap();
        let truth = [0.5, 0.20, 0.25, 0.6];
        for (bound, value) in b.iter().zip(truth.iter()) {
            assert!(bound.lo <= *value && *value <= bound.hi);
        }
        assert!(ModelName::Mm1.bounds(0.0).is_err());
    }
}
