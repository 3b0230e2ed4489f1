use serde::{Deserialize, Serialize};

use crate::coords::{stark_ell, ParabolicState};
use crate::error::{Error, ForbiddenReason, Result};
use crate::params::PhysParams;

/// A point `(u, p_u)` of the upper shadow edge at a fixed `ell_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub u: f64,
    pub pu: f64,
    pub ell_s: f64,
}

impl SectionPoint {
    pub fn new(u: f64, pu: f64, ell_s: f64) -> Self {
        Self { u, pu, ell_s }
    }

    pub fn pair(&self) -> (f64, f64) {
        (self.u, self.pu)
    }

    /// The same physical state seen from the other parabolic branch.
    pub fn mirror(&self) -> Self {
        Self::new(-self.u, -self.pu, self.ell_s)
    }
}

/// `p_v^2` of the lift, from `L_s = ell_s` on `uv = R`:
/// `p_v^2 = a + b / u^4` with `a = 2(mu - ell) - f R^2` and
/// `b = R^2 (p_u^2 - 2(mu + ell) - f R^2)`.
pub fn lifted_pv_squared(u: f64, pu: f64, ell_s: f64, p: &PhysParams) -> f64 {
    let r2 = p.r * p.r;
    let a = 2.0 * (p.mu - ell_s) - p.f * r2;
    let b = r2 * (pu * pu - 2.0 * (p.mu + ell_s) - p.f * r2);
    let u4 = u * u * u * u;
    a + b / u4
}

/// Closed-form domain test; `None` means admissible.
///
/// The tangential boundary `p_v^2 = 0` counts as forbidden.
pub fn forbidden_class(q: &SectionPoint, p: &PhysParams) -> Option<ForbiddenReason> {
    let (u, pu, ell) = (q.u, q.pu, q.ell_s);
    if !(u * u >= p.r) {
        return Some(ForbiddenReason::OffSection);
    }
    let r2 = p.r * p.r;
    let u4 = u * u * u * u;
    let bound = 2.0 * (p.mu + ell) + p.f * r2 + (p.f - 2.0 * (p.mu - ell) / r2) * u4;
    if pu * pu <= bound {
        return Some(ForbiddenReason::NegativeMomentum);
    }
    if u * pu < 0.0 {
        let den = 2.0 * (p.mu - ell) - p.f * r2;
        let num = (2.0 * (p.mu + ell) + p.f * r2) * r2;
        if den <= 0.0 || u4 * den <= num {
            return Some(ForbiddenReason::QuadrantOrientation);
        }
    }
    None
}

/// Phase point of an admissible section point: `v = R / u` and `p_v` with
/// the sign of `u`.
pub fn lift(q: &SectionPoint, p: &PhysParams) -> Result<ParabolicState> {
    if let Some(reason) = forbidden_class(q, p) {
        return Err(Error::ForbiddenPoint(reason));
    }
    let pv2 = lifted_pv_squared(q.u, q.pu, q.ell_s, p);
    let pv = q.u.signum() * pv2.sqrt();
    Ok(ParabolicState::new(q.pu, pv, q.u, p.r / q.u))
}

/// Tangent vectors of the lift with respect to `u` and `p_u`, as
/// `(dp_u, dp_v, du, dv)`.
pub fn lift_tangents(s: &ParabolicState, ell_s: f64, p: &PhysParams) -> [[f64; 4]; 2] {
    let (u, pu, pv) = (s.u, s.pu, s.pv);
    let r2 = p.r * p.r;
    let b = r2 * (pu * pu - 2.0 * (p.mu + ell_s) - p.f * r2);
    let u4 = u * u * u * u;
    let dpv_du = -2.0 * b / (u4 * u * pv);
    let dpv_dpu = pu * r2 / (u4 * pv);
    [[0.0, dpv_du, 1.0, -p.r / (u * u)], [1.0, dpv_dpu, 0.0, 0.0]]
}

/// Checks the membership conditions of a phase point on the section.
pub fn on_section(s: &ParabolicState, ell_s: f64, p: &PhysParams) -> bool {
    let ell = stark_ell(s.pu, s.pv, s.u, s.v, p.mu, p.f);
    s.u * s.u >= p.r
        && (s.u * s.v - p.r).abs() <= 1e-10 * p.r
        && s.u * s.pv > 0.0_f64.max(-s.pu * s.v)
        && (ell - ell_s).abs() <= 1e-9 * ell_s.abs().max(p.mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::REFERENCE_ELL;

    #[test]
    fn lift_restores_ell() {
        let p = PhysParams::default();
        for (u, pu) in [(3000.0, 100.0), (-2500.0, -40.0), (1250.0, 200.0), (900.0, -800.0)] {
            let q = SectionPoint::new(u, pu, REFERENCE_ELL);
            let s = lift(&q, &p).unwrap();
            let ell = stark_ell(s.pu, s.pv, s.u, s.v, p.mu, p.f);
            assert!((ell - REFERENCE_ELL).abs() <= 1e-12 * REFERENCE_ELL);
            assert!(on_section(&s, REFERENCE_ELL, &p));
        }
    }

    #[test]
    fn closed_form_classes_agree_with_the_lift() {
        let p = PhysParams::default();
        for i in 0..400 {
            let u = 80.0 + 12.0 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 };
            for pu in [-1300.0, -400.0, -5.0, 3.0, 600.0, 1250.0] {
                let q = SectionPoint::new(u, pu, REFERENCE_ELL);
                let pv2 = lifted_pv_squared(u, pu, REFERENCE_ELL, &p);
                let pv = u.signum() * pv2.max(0.0).sqrt();
                let v = p.r / u;
                let direct = u * u >= p.r && pv2 > 0.0 && u * pv > 0.0_f64.max(-pu * v);
                assert_eq!(forbidden_class(&q, &p).is_none(), direct, "u {u} pu {pu}");
            }
        }
    }

    #[test]
    fn boundary_of_the_momentum_condition_is_forbidden() {
        let p = PhysParams::default();
        // Choose u where the bound is positive, then sit exactly on it.
        let u: f64 = 150.0;
        let r2 = p.r * p.r;
        let bound = 2.0 * (p.mu + REFERENCE_ELL) + p.f * r2 + (p.f - 2.0 * (p.mu - REFERENCE_ELL) / r2) * u.powi(4);
        let q = SectionPoint::new(u, bound.sqrt(), REFERENCE_ELL);
        let q = SectionPoint::new(u, q.pu * (1.0 - 1e-16), REFERENCE_ELL);
        assert_eq!(forbidden_class(&q, &p), Some(ForbiddenReason::NegativeMomentum));
        assert!(forbidden_class(&SectionPoint::new(u, 1.01 * bound.sqrt(), REFERENCE_ELL), &p).is_none());
    }

    #[test]
    fn orientation_rules_by_quadrant() {
        let p = PhysParams::default();
        // Large |p_u| in the first quadrant is admissible.
        assert!(forbidden_class(&SectionPoint::new(200.0, 5000.0, REFERENCE_ELL), &p).is_none());
        // Beyond the quartic bound a second-quadrant point passes the quadrant test.
        let q2 = SectionPoint::new(-3000.0, 10.0, REFERENCE_ELL);
        assert!(forbidden_class(&q2, &p).is_none());
        // Above mu - f R^2 / 2 every second/fourth-quadrant point is excluded.
        let ell = p.mu - p.f * p.r * p.r / 4.0;
        let q4 = SectionPoint::new(5000.0, -3000.0, ell);
        assert_eq!(forbidden_class(&q4, &p), Some(ForbiddenReason::QuadrantOrientation));
        assert!(matches!(lift(&q4, &p), Err(Error::ForbiddenPoint(_))));
    }
}
