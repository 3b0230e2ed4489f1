//! Self-checks of the hybrid propagator that are also exposed on the command
//! line: the analytic Kepler transit against the numeric flow, and the
//! integral leaps at shadow crossings.
//!
//! Random draws come from a caller-supplied sampler of `[0, 1)` so the
//! library stays independent of any generator.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coords::{to_parabolic, Branch, CartesianState, ParabolicState};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::propagate::{
    default_step, kepler_transit_analytic, sunshadow_flow, Direction, FlowOptions, FlowStatus, RegimeKind, Surface,
};

/// State at polar angle `angle` and radius `r`, moving counterclockwise at
/// `speed_factor` times the circular speed.
pub fn launch(r: f64, angle: f64, speed_factor: f64, p: &PhysParams) -> Result<ParabolicState> {
    let v = speed_factor * (p.mu / r).sqrt();
    let (s, c) = angle.sin_cos();
    to_parabolic(&CartesianState::new(r * c, r * s, -v * s, v * c), Branch::Positive)
}

/// Largest componentwise difference relative to the largest entry of `a`.
pub fn phase_error(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitCheck {
    pub entries: usize,
    /// Worst relative difference of analytic and numeric exit states.
    pub max_exit_error: f64,
    /// Worst scaled residual of the transit polynomial at the chosen root.
    pub max_residual: f64,
}

/// Compares the closed-form Kepler transit with the numeric flow at `n`
/// shadow entries of orbits launched on the night side.
pub fn transit_check<R: FnMut() -> f64>(n: usize, mut uniform: R, p: &PhysParams) -> Result<TransitCheck> {
    let mut report = TransitCheck {
        entries: 0,
        max_exit_error: 0.0,
        max_residual: 0.0,
    };
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * uniform();
    while report.entries < n {
        let r = draw(12_000.0, 60_000.0);
        let k = draw(0.95, 1.15);
        let angle = PI + draw(-0.5, 0.5);
        let start = launch(r, angle, k, p)?;
        let mut opts = FlowOptions::new(default_step(&start, p));
        opts.stop_at_section = true;
        let out = sunshadow_flow(&start, RegimeKind::Stark, p, &opts)?;
        if out.status != FlowStatus::ReachedSection || out.events.len() < 2 {
            return Err(Error::LostOrbit);
        }
        let (entry, exit) = (out.events[0], out.events[1]);
        if (entry.surface, entry.direction) != (Surface::Lower, Direction::Entering) {
            return Err(Error::LostOrbit);
        }
        let sol = kepler_transit_analytic(&entry.state, p)?;
        report.max_exit_error = report.max_exit_error.max(phase_error(&exit.state.phase(), &sol.exit.phase()));
        report.max_residual = report.max_residual.max(sol.residual_scaled);
        report.entries += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeapsCheck {
    pub crossings: usize,
    /// Worst relative error of the measured `ell` leap against `+-f R^2 / 2`.
    pub max_ell_error: f64,
    /// Worst relative error of the measured energy leap against
    /// `+-f (u^2 - R^2 / u^2) / 2`.
    pub max_energy_error: f64,
    /// Worst relative change of `L_s` between consecutive Stark legs.
    pub max_stark_ell_drift: f64,
}

/// Measures the integral leaps along one long trajectory launched from
/// radius `r` on the night side that passes the shadow many times.
pub fn leaps_check(r: f64, speed_factor: f64, tau_stop: f64, p: &PhysParams) -> Result<LeapsCheck> {
    let start = launch(r, PI, speed_factor, p)?;
    let mut opts = FlowOptions::new(default_step(&start, p));
    opts.tau_stop = Some(tau_stop);
    let out = sunshadow_flow(&start, RegimeKind::Stark, p, &opts)?;
    let half = p.f * p.r * p.r / 2.0;
    let mut report = LeapsCheck {
        crossings: out.events.len(),
        max_ell_error: 0.0,
        max_energy_error: 0.0,
        max_stark_ell_drift: 0.0,
    };
    for ev in &out.events {
        let sign = match ev.direction {
            Direction::Entering => 1.0,
            Direction::Leaving => -1.0,
        };
        let u2 = ev.state.u * ev.state.u;
        let expect_h = sign * p.f * (u2 - p.r * p.r / u2) / 2.0;
        report.max_ell_error = report.max_ell_error.max((ev.delta_ell - sign * half).abs() / half);
        report.max_energy_error = report.max_energy_error.max((ev.delta_h - expect_h).abs() / expect_h.abs());
    }
    let stark: Vec<f64> = out
        .legs
        .iter()
        .filter(|l| l.kind == RegimeKind::Stark)
        .map(|l| l.ell_start)
        .collect();
    for w in stark.windows(2) {
        report.max_stark_ell_drift = report.max_stark_ell_drift.max((w[1] - w[0]).abs() / w[0].abs().max(p.mu));
    }
    Ok(report)
}
