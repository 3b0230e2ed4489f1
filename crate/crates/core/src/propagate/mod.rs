//! Hybrid Kepler/Stark flow in `(p_u, p_v, u, v, t)` with guarded shadow
//! crossings, tangent propagation, and the analytic Kepler shadow transit.

mod flow;
mod trajectory;
mod transit;

use serde::{Deserialize, Serialize};

use crate::coords::{energy_gradient, kepler_ell, kepler_energy, stark_ell, stark_energy, ParabolicState};
use crate::params::PhysParams;
use crate::stark::period_v;

pub use flow::{
    sunshadow_flow, variational_flow, CrossingEvent, Direction, FlowOptions, FlowResult, FlowStatus, LegRecord,
    ScalarEvent, Surface, TrajectoryRow, VariationalResult, EVENT_TOL, TANGENCY_TOL,
};
pub use trajectory::write_trajectory_csv;
pub use transit::{kepler_transit_analytic, transit_polynomial, TransitSolution};

/// Dynamics active on a leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeKind {
    Kepler,
    Stark,
}

impl RegimeKind {
    pub fn other(self) -> Self {
        match self {
            Self::Kepler => Self::Stark,
            Self::Stark => Self::Kepler,
        }
    }

    /// Radiation acceleration seen by this regime.
    pub fn force(self, p: &PhysParams) -> f64 {
        match self {
            Self::Kepler => 0.0,
            Self::Stark => p.f,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Kepler => "kepler",
            Self::Stark => "stark",
        }
    }

    /// Regime dictated by position: Kepler inside the shadow strip.
    pub fn at(s: &ParabolicState, p: &PhysParams) -> Self {
        if in_shadow(s.u, s.v, p.r) {
            Self::Kepler
        } else {
            Self::Stark
        }
    }
}

/// Regime plus the energy frozen at its entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub h: f64,
}

impl Regime {
    /// Enters `kind` at `s`, freezing its Hamiltonian value.
    pub fn enter(kind: RegimeKind, s: &ParabolicState, p: &PhysParams) -> Self {
        Self {
            kind,
            h: energy(kind, s, p),
        }
    }
}

/// Shadow membership in parabolic coordinates: `|uv| <= R` with `u^2 >= R`.
pub fn in_shadow(u: f64, v: f64, r: f64) -> bool {
    (u * v).abs() <= r && u * u >= r
}

/// Hamiltonian of `kind` at `s`.
pub fn energy(kind: RegimeKind, s: &ParabolicState, p: &PhysParams) -> f64 {
    match kind {
        RegimeKind::Kepler => kepler_energy(s.pu, s.pv, s.u, s.v, p.mu),
        RegimeKind::Stark => stark_energy(s.pu, s.pv, s.u, s.v, p.mu, p.f),
    }
}

/// Laplace-Lenz-type integral of `kind` at `s`.
pub fn ell(kind: RegimeKind, s: &ParabolicState, p: &PhysParams) -> f64 {
    match kind {
        RegimeKind::Kepler => kepler_ell(s.pu, s.pv, s.u, s.v, p.mu),
        RegimeKind::Stark => stark_ell(s.pu, s.pv, s.u, s.v, p.mu, p.f),
    }
}

fn energy_grad(kind: RegimeKind, y: &[f64], p: &PhysParams) -> [f64; 4] {
    energy_gradient(y[0], y[1], y[2], y[3], p.mu, kind.force(p))
}

fn nominal_field(kind: RegimeKind, h: f64, f: f64, y: &[f64]) -> [f64; 5] {
    let (pu, pv, u, v) = (y[0], y[1], y[2], y[3]);
    let (fu, fv) = match kind {
        RegimeKind::Kepler => (0.0, 0.0),
        RegimeKind::Stark => (2.0 * f * u * u * u, -2.0 * f * v * v * v),
    };
    [2.0 * h * u + fu, 2.0 * h * v + fv, pu, pv, u * u + v * v]
}

/// Field in fictitious time of `(p_u, p_v, u, v, t)` under `regime`.
pub fn field(regime: Regime, s: &ParabolicState, p: &PhysParams) -> [f64; 5] {
    nominal_field(regime.kind, regime.h, p.f, &[s.pu, s.pv, s.u, s.v])
}

/// Nominal field plus tangent columns `(dp_u, dp_v, du, dv, dh)` appended in
/// blocks of five; `dh` is constant along a leg.
fn augmented_field<const N: usize>(kind: RegimeKind, h: f64, f: f64, y: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    out[..5].copy_from_slice(&nominal_field(kind, h, f, &y[..5]));
    let (u, v) = (y[2], y[3]);
    let (au, av) = match kind {
        RegimeKind::Kepler => (2.0 * h, 2.0 * h),
        RegimeKind::Stark => (2.0 * h + 6.0 * f * u * u, 2.0 * h - 6.0 * f * v * v),
    };
    for c in (5..N).step_by(5) {
        let (dpu, dpv, du, dv, dh) = (y[c], y[c + 1], y[c + 2], y[c + 3], y[c + 4]);
        out[c] = au * du + 2.0 * u * dh;
        out[c + 1] = av * dv + 2.0 * v * dh;
        out[c + 2] = dpu;
        out[c + 3] = dpv;
        out[c + 4] = 0.0;
    }
    out
}

/// Fixed step in `tau` for flows started at `s`: the Stark `T_v` of the
/// state's integrals divided by `steps_per_period`, or a local frequency
/// estimate when no period is available.
pub fn default_step(s: &ParabolicState, p: &PhysParams) -> f64 {
    let n = p.steps_per_period as f64;
    let hs = stark_energy(s.pu, s.pv, s.u, s.v, p.mu, p.f);
    let ls = stark_ell(s.pu, s.pv, s.u, s.v, p.mu, p.f);
    if let Ok(tv) = period_v(ls, hs, p) {
        if tv.is_finite() && tv > 0.0 {
            return tv / n;
        }
    }
    let omega2 = 2.0 * hs.abs() + 6.0 * p.f * (s.u * s.u + s.v * s.v) + 2.0 * (p.f * p.mu).sqrt();
    2.0 * std::f64::consts::PI / (n * omega2.sqrt())
}
