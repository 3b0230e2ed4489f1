use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earth gravitational parameter, km^3/s^2.
pub const EARTH_MU: f64 = 398_600.441_8;
/// Earth equatorial radius, km. Also the half-width of the shadow strip.
pub const EARTH_RADIUS: f64 = 6_378.136_3;
/// Radiation acceleration used throughout the worked examples, km/s^2.
pub const REFERENCE_F: f64 = 9.12e-9;
/// Stark integral value of the reference section, km^3/s^2.
pub const REFERENCE_ELL: f64 = 348_600.0;

/// Physical constants plus the numerical budgets of the propagator.
///
/// Units are fixed: km, s, and the fictitious time `tau` in s/km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysParams {
    pub mu: f64,
    pub f: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// Escape radius in km. `None` means ten times the brake-family `xi*`
    /// of whatever `ell_s` context the caller works in.
    pub r_escape: Option<f64>,
    /// Maximum |tau| per hybrid flow (one map application).
    pub tau_budget: f64,
    /// Maximum number of regime switches per hybrid flow.
    pub switch_budget: usize,
    /// Absolute floor of the implicit stage solver.
    pub tol_abs: f64,
    /// Relative tolerance of the implicit stage solver.
    pub tol_rel: f64,
    /// Fixed steps per `T_v` period of the active Stark context.
    pub steps_per_period: usize,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            mu: EARTH_MU,
            f: REFERENCE_F,
            r: EARTH_RADIUS,
            r_escape: None,
            tau_budget: 1500.0,
            switch_budget: 200,
            tol_abs: 1e-300,
            tol_rel: 1e-15,
            steps_per_period: 400,
        }
    }
}

impl PhysParams {
    pub fn new(mu: f64, f: f64, r: f64) -> Result<Self> {
        let p = Self {
            mu,
            f,
            r,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.f, self.r, self.tau_budget, self.tol_rel, self.tol_abs];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite value".into()));
        }
        if self.mu <= 0.0 || self.f <= 0.0 || self.r <= 0.0 {
            return Err(Error::InvalidParams("mu, f and R must be positive".into()));
        }
        if self.f * self.r * self.r / 2.0 >= self.mu {
            return Err(Error::InvalidParams(format!(
                "f R^2 / 2 = {} must be below mu = {}",
                self.f * self.r * self.r / 2.0,
                self.mu
            )));
        }
        if let Some(re) = self.r_escape {
            if !re.is_finite() || re <= self.r {
                return Err(Error::InvalidParams(format!(
                    "r_escape = {re} must exceed R = {}",
                    self.r
                )));
            }
        }
        if self.tau_budget <= 0.0 || self.switch_budget == 0 || self.steps_per_period < 8 {
            return Err(Error::InvalidParams(
                "budgets must be positive and steps_per_period >= 8".into(),
            ));
        }
        if self.tol_rel <= 0.0 || self.tol_abs < 0.0 {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Escape radius for a given `ell_s` context.
    pub fn escape_radius(&self, ell_s: f64) -> f64 {
        if let Some(re) = self.r_escape {
            return re;
        }
        let s = self.mu + ell_s;
        if s > 0.0 && ell_s < self.mu {
            10.0 * (2.0 * s / self.f).sqrt()
        } else {
            10.0 * (4.0 * self.mu / self.f).sqrt()
        }
    }

    /// Length unit of the section plane, `(2 mu / f)^(1/4)` in km^(1/2).
    pub fn section_u_unit(&self) -> f64 {
        (2.0 * self.mu / self.f).powf(0.25)
    }

    /// Momentum unit of the section plane, `sqrt(2 mu)` in km^(3/2)/s.
    pub fn section_pu_unit(&self) -> f64 {
        (2.0 * self.mu).sqrt()
    }

    /// Distance between two section points in scaled units.
    pub fn section_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let du = (a.0 - b.0) / self.section_u_unit();
        let dp = (a.1 - b.1) / self.section_pu_unit();
        du.hypot(dp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PhysParams::default().validate().unwrap();
    }

    #[test]
    fn escape_radius_must_exceed_r() {
        let p = PhysParams {
            r_escape: Some(EARTH_RADIUS),
            ..PhysParams::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn radiation_must_be_weak_enough() {
        assert!(PhysParams::new(1.0, 1.0, 2.0).is_err());
        assert!(PhysParams::new(EARTH_MU, -1.0, EARTH_RADIUS).is_err());
    }

    #[test]
    fn json_uses_capital_r() {
        let p = PhysParams::default();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"R\":"));
        let back: PhysParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let partial: PhysParams = serde_json::from_str(r#"{"f": 1e-8}"#).unwrap();
        assert_eq!(partial.f, 1e-8);
        assert_eq!(partial.mu, EARTH_MU);
    }
}
