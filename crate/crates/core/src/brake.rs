//! Symmetric brake orbits of the Sun-shadow dynamics.
//!
//! A Kepler arc leaves the x-axis at `(x0, 0)` perpendicular to it, exits the
//! shadow at `u^2 = xi_E`, and continues under the Stark flow. When the Stark
//! motions in `u` and `v` become stationary at the same fictitious time
//! (`tau_u = tau_v`) the satellite stops at a zero-velocity point and the
//! orbit retraces itself.

use serde::{Deserialize, Serialize};

use crate::coords::ParabolicState;
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::propagate::{sunshadow_flow, FlowOptions, FlowStatus, RegimeKind};
use crate::special::{bisect, ellip_f};
use twofloat::TwoFloat;
use crate::stark::{brake_family, period_v, quartic_structure, BrakeFamily};

/// Guard below `h_s*` that keeps the matching equation away from the
/// divergence of `tau_u`, relative to `|h_s*|`.
pub const DELTA_GUARD: f64 = 1e-12;
/// Points of the log-spaced scan of the matching equation.
const SCAN_POINTS: usize = 240;

/// Interval of `ell_s` on which every `x0 >= xi*/2` has a real exit point.
pub fn ell_window(p: &PhysParams) -> (f64, f64) {
    let fr2 = p.f * p.r * p.r;
    let root = (p.mu * p.mu + 9.0 / 16.0 * fr2 * fr2 - 2.5 * fr2 * p.mu).sqrt();
    (-1.25 * fr2 - root, -1.25 * fr2 + root)
}

fn check_window(ell_s: f64, p: &PhysParams) -> Result<()> {
    let (lo, hi) = ell_window(p);
    if ell_s < lo || ell_s > hi {
        return Err(Error::OutOfRange { value: ell_s, lo, hi });
    }
    Ok(())
}

/// Kepler-side constants of a brake context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerSide {
    /// `ell_s + f R^2 / 2`.
    pub ell_k: f64,
    /// `(mu + ell_k) / (mu - ell_k)`.
    pub a_k: f64,
}

pub fn kepler_side(ell_s: f64, p: &PhysParams) -> KeplerSide {
    let ell_k = ell_s + p.f * p.r * p.r / 2.0;
    KeplerSide {
        ell_k,
        a_k: (p.mu + ell_k) / (p.mu - ell_k),
    }
}

/// Exit point of the symmetric Kepler arc started at `(x0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitGeometry {
    pub x_t: f64,
    pub xi_e: f64,
    pub x_e: f64,
    /// Stark energy after the exit.
    pub hs: f64,
}

pub fn exit_geometry(ell_s: f64, x0: f64, p: &PhysParams) -> Result<ExitGeometry> {
    let k = kepler_side(ell_s, p);
    let rad = x0 * x0 - k.a_k * p.r * p.r;
    if rad < 0.0 || !rad.is_finite() {
        return Err(Error::ComplexXT(rad));
    }
    let x_t = rad.sqrt();
    let xi_e = x0 + x_t;
    let r2 = p.r * p.r;
    Ok(ExitGeometry {
        x_t,
        xi_e,
        x_e: xi_e / 2.0 - r2 / (2.0 * xi_e),
        hs: -(p.mu + k.ell_k) / (2.0 * x0) - p.f / 2.0 * xi_e + p.f * r2 / (2.0 * xi_e),
    })
}

/// Start abscissa producing a given exit square `xi_E`.
pub fn x0_of_xi_e(ell_s: f64, xi_e: f64, p: &PhysParams) -> f64 {
    let k = kepler_side(ell_s, p);
    (xi_e * xi_e + k.a_k * p.r * p.r) / (2.0 * xi_e)
}

/// Stark energy after the exit, as a function of `xi_E`.
fn hs_of_xi_e(ell_s: f64, xi_e: f64, p: &PhysParams) -> f64 {
    let k = kepler_side(ell_s, p);
    let r2 = p.r * p.r;
    -(p.mu + k.ell_k) * xi_e / (xi_e * xi_e + k.a_k * r2) - p.f * xi_e / 2.0 + p.f * r2 / (2.0 * xi_e)
}

/// `h_s* - h_s(xi_E)` in double-double arithmetic.
///
/// Near the matching root this gap is about `1e-7 |h_s*|`, so an f64
/// evaluation would lose nine digits of it, and the roots `xi1, xi2` depend
/// on its square root.
fn energy_gap(ell_s: f64, xi_e: f64, p: &PhysParams) -> f64 {
    let f = TwoFloat::from(p.f);
    let mu = TwoFloat::from(p.mu);
    let r2 = TwoFloat::new_mul(p.r, p.r);
    let two = TwoFloat::from(2.0);
    let ell_k = TwoFloat::from(ell_s) + f * r2 / two;
    let a = mu + ell_k;
    let a_k = a / (mu - ell_k);
    let x = TwoFloat::from(xi_e);
    let hs = -(a * x) / (x * x + a_k * r2) - f * x / two + f * r2 / (two * x);
    let h_star = -(two * f * TwoFloat::new_add(p.mu, ell_s)).sqrt();
    (h_star - hs).hi()
}

/// Inverts the strictly decreasing exit energy on the ray `x0 >= xi*/2`.
pub fn xi_e_for_energy(ell_s: f64, hs: f64, p: &PhysParams) -> Result<f64> {
    let fam = brake_family(ell_s, p)?;
    let lo = exit_geometry(ell_s, fam.xi_star / 2.0, p)?.xi_e;
    let h_lo = hs_of_xi_e(ell_s, lo, p);
    if hs > h_lo {
        return Err(Error::OutOfRegion(format!(
            "energy {hs} above the largest exit energy {h_lo}"
        )));
    }
    let mut hi = 2.0 * lo;
    while hs_of_xi_e(ell_s, hi, p) > hs {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    bisect(|xi| hs_of_xi_e(ell_s, xi, p) - hs, lo, hi, 4.0 * f64::EPSILON).ok_or(Error::NoBracket { lo, hi })
}

/// Roots of `U` and `V` together with the exit square at energy `hs`.
#[derive(Debug, Clone, Copy)]
struct StarkLeg {
    hs: f64,
    xi1: f64,
    xi2: f64,
    eta1: f64,
    eta2: f64,
    xi_e: f64,
}

fn stark_leg(ell_s: f64, hs: f64, p: &PhysParams) -> Result<StarkLeg> {
    stark_leg_at(ell_s, xi_e_for_energy(ell_s, hs, p)?, p)
}

/// Leg data at a given exit square; the energy follows from `xi_E` directly,
/// which is far better conditioned than inverting it near `h_s*`.
fn stark_leg_at(ell_s: f64, xi_e: f64, p: &PhysParams) -> Result<StarkLeg> {
    let fam = brake_family(ell_s, p)?;
    let gap = energy_gap(ell_s, xi_e, p);
    let hs = fam.hs_star - gap;
    if !(gap > 0.0) {
        return Err(Error::OutOfRegion(format!("energy {hs} not below h_s* = {}", fam.hs_star)));
    }
    // xi1,2 = (|h| +- sqrt(h^2 - h*^2)) / f with h^2 - h*^2 = gap (2|h*| + gap).
    let abs_star = -fam.hs_star;
    let xi1 = (abs_star + gap + (gap * (2.0 * abs_star + gap)).sqrt()) / p.f;
    let q = quartic_structure(ell_s, hs, p);
    let leg = StarkLeg {
        hs,
        xi1,
        xi2: fam.xi_star * fam.xi_star / xi1,
        eta1: q.eta1(),
        eta2: q.eta2(),
        xi_e,
    };
    if !(leg.xi_e > leg.xi1) {
        return Err(Error::OutOfRegion(format!(
            "exit square {} not beyond xi1 = {}",
            leg.xi_e, leg.xi1
        )));
    }
    Ok(leg)
}

/// Fictitious time for `u` to fall from `sqrt(xi_E)` to its turning point.
pub fn tau_u(ell_s: f64, hs: f64, p: &PhysParams) -> Result<f64> {
    let l = stark_leg(ell_s, hs, p)?;
    Ok(tau_u_of(&l, p))
}

fn tau_u_of(l: &StarkLeg, p: &PhysParams) -> f64 {
    let r_xi = ((l.xi_e - l.xi1) / (l.xi_e - l.xi2)).sqrt();
    ellip_f(r_xi.asin(), l.xi2 / l.xi1) / (p.f * l.xi1).sqrt()
}

/// Fictitious time for `v` to rise from `R / sqrt(xi_E)` to `v1`.
pub fn tau_v(ell_s: f64, hs: f64, p: &PhysParams) -> Result<f64> {
    let l = stark_leg(ell_s, hs, p)?;
    Ok(tau_v_of(&l, p))
}

fn tau_v_of(l: &StarkLeg, p: &PhysParams) -> f64 {
    let d_eta = l.eta1 - l.eta2;
    let arg = (1.0 - p.r * p.r / (l.xi_e * l.eta1)).max(0.0).sqrt();
    ellip_f(arg.asin(), l.eta1 / d_eta) / (p.f * d_eta).sqrt()
}

/// Bracket constants of the start abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartBounds {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub x0_minus: f64,
    pub x0_plus: f64,
}

pub fn start_bounds(ell_s: f64, p: &PhysParams) -> Result<StartBounds> {
    let fam = brake_family(ell_s, p)?;
    let k = kepler_side(ell_s, p);
    let xs = fam.xi_star;
    let c = (1.0 - 4.0 * k.a_k * p.r * p.r / (xs * xs)).sqrt();
    let c1 = p.r / 2.0 * k.a_k.sqrt();
    let c2 = p.r * ((1.0 - c + 2.0 * k.a_k) / (1.0 + c)).sqrt();
    Ok(StartBounds {
        c,
        c1,
        c2,
        x0_minus: xs / 2.0 + c1,
        x0_plus: (xs + c2) / 2.0,
    })
}

/// Energy below which `tau_u < tau_v` is guaranteed.
pub fn hs_bar(ell_s: f64, p: &PhysParams) -> Result<f64> {
    check_window(ell_s, p)?;
    let fam = brake_family(ell_s, p)?;
    let b = start_bounds(ell_s, p)?;
    let xs = fam.xi_star;
    let k1 = 2f64.sqrt() * (1.0 + (2.0 * (p.mu - ell_s) / p.f).sqrt() / xs).sqrt();
    let k2 = (1.0 - p.r * p.r / (xs * fam.eta1_star)).sqrt().asin();
    let ratio = k1 / k2;
    let inner = xs * xs + b.c2 * b.c2 / 4.0 * ratio * ratio * (2.0 + ratio).powi(2);
    Ok(-p.f * inner.sqrt())
}

/// Matching function `tau_u - tau_v`.
pub fn matching(ell_s: f64, hs: f64, p: &PhysParams) -> Result<f64> {
    let l = stark_leg(ell_s, hs, p)?;
    Ok(tau_u_of(&l, p) - tau_v_of(&l, p))
}

/// Matching function evaluated at an exit square instead of an energy.
pub fn matching_at_exit(ell_s: f64, xi_e: f64, p: &PhysParams) -> Result<f64> {
    let l = stark_leg_at(ell_s, xi_e, p)?;
    Ok(tau_u_of(&l, p) - tau_v_of(&l, p))
}

/// One root of the matching equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingRoot {
    pub hs: f64,
    pub xi_e: f64,
}

/// A brake orbit of the hybrid dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrakeSolution {
    pub ell_s: f64,
    pub x0_star: f64,
    pub hs_hat: f64,
    pub xi_e: f64,
    pub pu_e: f64,
    pub brake_point: (f64, f64),
    /// Cartesian speed reached at the brake point by propagation.
    pub brake_speed: f64,
    pub residual_tau: f64,
    pub hs_bar: f64,
    pub hs_star: f64,
    /// Every root of the matching equation found on the scan, ascending.
    pub all_roots: Vec<f64>,
    /// Fictitious time of the Kepler arc from the axis to the exit.
    pub tau_kepler: f64,
    /// Fictitious time of the Stark arc from the exit to the brake point.
    pub tau_stark: f64,
    pub params: PhysParams,
}

impl BrakeSolution {
    /// Start of the orbit on the x-axis, moving up.
    pub fn start_state(&self, p: &PhysParams) -> ParabolicState {
        let k = kepler_side(self.ell_s, p);
        ParabolicState::new(0.0, (2.0 * (p.mu - k.ell_k)).sqrt(), (2.0 * self.x0_star).sqrt(), 0.0)
    }

    /// Full period in fictitious time.
    pub fn period_tau(&self) -> f64 {
        4.0 * (self.tau_kepler + self.tau_stark)
    }

    /// The two fixed points `(sqrt(xi_E), -p_uE)` and `(-sqrt(xi_E), p_uE)`.
    pub fn fixed_point_seeds(&self) -> [(f64, f64); 2] {
        let u = self.xi_e.sqrt();
        [(u, -self.pu_e), (-u, self.pu_e)]
    }
}

/// Roots of the matching equation on `[h_bar, h_s* - guard]`, by ascending
/// energy.
///
/// The scan is log-spaced in `h_s* - h_s`; each sign change is bisected in
/// `xi_E`.
pub fn matching_roots(ell_s: f64, p: &PhysParams) -> Result<(Vec<MatchingRoot>, f64, BrakeFamily)> {
    check_window(ell_s, p)?;
    let fam = brake_family(ell_s, p)?;
    let h_bar = hs_bar(ell_s, p)?;
    let hs = fam.hs_star;
    let d_lo = hs - h_bar;
    let d_hi = DELTA_GUARD * hs.abs();
    if !(d_lo > d_hi) {
        return Err(Error::NoBracket { lo: h_bar, hi: hs - d_hi });
    }
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            let t = i as f64 / (SCAN_POINTS - 1) as f64;
            let h = hs - (d_lo.ln() + t * (d_hi.ln() - d_lo.ln())).exp();
            xi_e_for_energy(ell_s, h, p)
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = grid
        .iter()
        .map(|&xi| matching_at_exit(ell_s, xi, p))
        .collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (ga, gb) = (values[i], values[i + 1]);
        let xi_e = if ga == 0.0 {
            a
        } else if ga.signum() != gb.signum() {
            bisect(|xi| matching_at_exit(ell_s, xi, p).unwrap_or(f64::NAN), a, b, f64::EPSILON)
                .ok_or(Error::NoBracket { lo: a, hi: b })?
        } else {
            continue;
        };
        roots.push(MatchingRoot {
            hs: hs_of_xi_e(ell_s, xi_e, p),
            xi_e,
        });
    }
    Ok((roots, h_bar, fam))
}

/// Solves `tau_u = tau_v`, defaulting to the smallest root, and verifies the
/// orbit by propagation to its brake point.
pub fn solve_brake(ell_s: f64, p: &PhysParams) -> Result<BrakeSolution> {
    let (roots, h_bar, fam) = matching_roots(ell_s, p)?;
    let root = *roots.first().ok_or(Error::NoBracket {
        lo: h_bar,
        hi: fam.hs_star * (1.0 + DELTA_GUARD),
    })?;
    let leg = stark_leg_at(ell_s, root.xi_e, p)?;
    let hs_hat = leg.hs;
    let residual_tau = (tau_u_of(&leg, p) - tau_v_of(&leg, p)).abs();
    let xi_e = leg.xi_e;
    let x0_star = x0_of_xi_e(ell_s, xi_e, p);
    let pu_e = (2.0 * hs_hat * xi_e + 2.0 * (p.mu + ell_s) + p.f * xi_e * xi_e).max(0.0).sqrt();
    let mut sol = BrakeSolution {
        ell_s,
        x0_star,
        hs_hat,
        xi_e,
        pu_e,
        brake_point: (f64::NAN, f64::NAN),
        brake_speed: f64::NAN,
        residual_tau,
        hs_bar: h_bar,
        hs_star: fam.hs_star,
        all_roots: roots.iter().map(|r| r.hs).collect(),
        tau_kepler: f64::NAN,
        tau_stark: f64::NAN,
        params: *p,
    };
    let arc = brake_arc(&sol, p)?;
    sol.brake_point = (arc.brake.x(), arc.brake.y());
    sol.brake_speed = arc.brake.speed();
    sol.tau_kepler = arc.tau_kepler;
    sol.tau_stark = arc.tau_stark;
    Ok(sol)
}

/// Propagated quarter of a brake orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakeArc {
    pub exit: ParabolicState,
    pub brake: ParabolicState,
    pub tau_kepler: f64,
    pub tau_stark: f64,
}

/// Fixed step used for brake-orbit propagation.
pub fn brake_step(sol: &BrakeSolution, p: &PhysParams) -> Result<f64> {
    Ok(period_v(sol.ell_s, sol.hs_hat, p)? / p.steps_per_period as f64)
}

/// Propagates from the axis to the exit and on to the `p_v = 0` brake point.
pub fn brake_arc(sol: &BrakeSolution, p: &PhysParams) -> Result<BrakeArc> {
    let dt = brake_step(sol, p)?;
    let start = sol.start_state(p);
    let mut opts = FlowOptions::new(dt);
    opts.stop_at_section = true;
    opts.ell_context = Some(sol.ell_s);
    let kep = sunshadow_flow(&start, RegimeKind::Kepler, p, &opts)?;
    if kep.status != FlowStatus::ReachedSection {
        return Err(Error::LostOrbit);
    }
    let exit = kep.final_state;
    let pv_zero = |y: &[f64; 5]| (y[1], [0.0, 1.0, 0.0, 0.0, 0.0]);
    let mut opts = FlowOptions::new(dt);
    opts.scalar_event = Some(&pv_zero);
    opts.ell_context = Some(sol.ell_s);
    let st = sunshadow_flow(&exit, RegimeKind::Stark, p, &opts)?;
    if st.status != FlowStatus::EventReached {
        return Err(Error::LostOrbit);
    }
    Ok(BrakeArc {
        exit,
        brake: st.final_state,
        tau_kepler: exit.tau - start.tau,
        tau_stark: st.final_state.tau - exit.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::REFERENCE_ELL;

    #[test]
    fn window_limits() {
        let p = PhysParams::default();
        let (lo, hi) = ell_window(&p);
        assert!(lo > -p.mu && hi < p.mu);
        assert!(lo < REFERENCE_ELL && REFERENCE_ELL < hi);
        let weak = PhysParams {
            f: 1e-20,
            ..PhysParams::default()
        };
        let (lo, hi) = ell_window(&weak);
        assert!((lo + p.mu).abs() < 1e-6 && (hi - p.mu).abs() < 1e-6);
    }

    #[test]
    fn exit_energy_round_trip() {
        let p = PhysParams::default();
        let fam = brake_family(REFERENCE_ELL, &p).unwrap();
        let x0 = 0.6 * fam.xi_star;
        let g = exit_geometry(REFERENCE_ELL, x0, &p).unwrap();
        assert!((hs_of_xi_e(REFERENCE_ELL, g.xi_e, &p) - g.hs).abs() < 1e-14 * g.hs.abs());
        assert!((x0_of_xi_e(REFERENCE_ELL, g.xi_e, &p) - x0).abs() < 1e-8 * x0);
        let back = xi_e_for_energy(REFERENCE_ELL, g.hs, &p).unwrap();
        assert!((back - g.xi_e).abs() < 1e-12 * g.xi_e);
    }

    #[test]
    fn small_start_has_complex_exit() {
        let p = PhysParams::default();
        assert!(matches!(exit_geometry(REFERENCE_ELL, 100.0, &p), Err(Error::ComplexXT(_))));
    }
}
