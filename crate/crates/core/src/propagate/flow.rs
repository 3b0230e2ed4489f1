use serde::{Deserialize, Serialize};

use super::{augmented_field, ell, energy, energy_grad, nominal_field, Regime, RegimeKind};
use crate::coords::ParabolicState;
use crate::error::{Error, Result};
use crate::gauss::{step_increment, Compensated, StageTolerance};
use crate::params::PhysParams;

/// Event tolerance on the guard value, relative to `R`.
pub const EVENT_TOL: f64 = 1e-10;
/// Transversality threshold below which a crossing is reported as tangential.
pub const TANGENCY_TOL: f64 = 1e-13;

/// Which shadow boundary a guard watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Surface {
    /// `uv = R`, the line `y = R`.
    Upper,
    /// `uv = -R`, the line `y = -R`.
    Lower,
}

impl Surface {
    const ALL: [Surface; 2] = [Surface::Upper, Surface::Lower];

    pub fn value(self, u: f64, v: f64, r: f64) -> f64 {
        match self {
            Self::Upper => u * v - r,
            Self::Lower => u * v + r,
        }
    }

    fn index(self) -> usize {
        match self {
            Self::Upper => 0,
            Self::Lower => 1,
        }
    }

    /// Sign of the guard on the shadow side.
    fn inside_sign(self) -> f64 {
        match self {
            Self::Upper => -1.0,
            Self::Lower => 1.0,
        }
    }
}

/// Crossing direction in the integration direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Entering,
    Leaving,
}

/// A guarded shadow-boundary crossing with the measured integral leaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub tau: f64,
    pub state: ParabolicState,
    pub surface: Surface,
    pub direction: Direction,
    pub from: RegimeKind,
    /// Energy frozen on the leg that ends here.
    pub h_before: f64,
    /// Energy frozen on the leg that starts here.
    pub h_after: f64,
    /// Laplace-Lenz-type integral of the ending leg, read at its start.
    pub ell_before: f64,
    /// Laplace-Lenz-type integral of the starting leg, read here.
    pub ell_after: f64,
    /// Energy leap across the surface, both sides read at the event state.
    pub delta_h: f64,
    /// Laplace-Lenz-type leap across the surface, read at the event state.
    pub delta_ell: f64,
    /// Set on the crossing that terminates a section-to-section flow.
    pub is_return: bool,
}

/// Terminal status of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowStatus {
    ReachedSection,
    Collision,
    Escape,
    BudgetExceeded,
    /// The requested `tau_stop` was reached.
    Elapsed,
    /// The caller's scalar event fired.
    EventReached,
}

/// One leg of constant regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegRecord {
    pub kind: RegimeKind,
    pub h: f64,
    pub ell_start: f64,
    pub tau_start: f64,
    pub tau_end: f64,
}

/// One row of a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub state: ParabolicState,
    pub regime: RegimeKind,
    pub h: f64,
    pub ell: f64,
    pub event: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub final_state: ParabolicState,
    pub final_regime: Regime,
    pub events: Vec<CrossingEvent>,
    pub legs: Vec<LegRecord>,
    pub status: FlowStatus,
    /// Accumulated turning angle of `(u, v)` around the origin, radians.
    pub uv_turn: f64,
    pub rows: Vec<TrajectoryRow>,
}

/// Scalar stop condition on `(p_u, p_v, u, v, t)`: value and gradient.
pub type ScalarEvent = dyn Fn(&[f64; 5]) -> (f64, [f64; 5]) + Sync;

/// Knobs of one flow.
#[derive(Clone, Copy)]
pub struct FlowOptions<'a> {
    /// Signed fixed step in `tau`; negative integrates backward.
    pub dtau: f64,
    /// Stop at the first outward crossing of `uv = R` with `u p_v > 0`.
    pub stop_at_section: bool,
    /// Stop after this much `|tau|`.
    pub tau_stop: Option<f64>,
    pub scalar_event: Option<&'a ScalarEvent>,
    /// Keep every accepted step in `FlowResult::rows`.
    pub record: bool,
    /// `ell_s` context for the default escape radius.
    pub ell_context: Option<f64>,
}

impl<'a> FlowOptions<'a> {
    pub fn new(dtau: f64) -> Self {
        Self {
            dtau,
            stop_at_section: false,
            tau_stop: None,
            scalar_event: None,
            record: false,
            ell_context: None,
        }
    }
}

/// Flow plus final tangent columns `(dp_u, dp_v, du, dv, dh)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalResult {
    pub flow: FlowResult,
    pub columns: Vec<[f64; 5]>,
}

/// Hybrid Sun-shadow flow from `start` in the `kind` regime.
pub fn sunshadow_flow(start: &ParabolicState, kind: RegimeKind, p: &PhysParams, opts: &FlowOptions) -> Result<FlowResult> {
    Engine::<5>::new(start, &[], kind, p, opts)?.run().map(|(r, _)| r)
}

/// Hybrid flow carrying tangent vectors `(dp_u, dp_v, du, dv)` at the start.
///
/// `N` must equal `5 + 5 * columns.len()`. The energy variation `dh` of each
/// column is set from the entry state at the start and after every switch,
/// and each column is projected onto the crossed surface along the ending
/// leg's field, which yields the derivative of the hitting point.
pub fn variational_flow<const N: usize>(
    start: &ParabolicState,
    columns: &[[f64; 4]],
    kind: RegimeKind,
    p: &PhysParams,
    opts: &FlowOptions,
) -> Result<VariationalResult> {
    if 5 + 5 * columns.len() != N {
        return Err(Error::InvalidParams(format!(
            "state size {N} does not hold {} tangent columns",
            columns.len()
        )));
    }
    let (flow, y) = Engine::<N>::new(start, columns, kind, p, opts)?.run()?;
    let columns = (5..N)
        .step_by(5)
        .map(|c| [y[c], y[c + 1], y[c + 2], y[c + 3], y[c + 4]])
        .collect();
    Ok(VariationalResult { flow, columns })
}

fn to_state(y: &[f64], tau: f64) -> ParabolicState {
    ParabolicState {
        pu: y[0],
        pv: y[1],
        u: y[2],
        v: y[3],
        tau,
        t: y[4],
    }
}

fn sign_of(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

enum Watch {
    Guard(Surface),
    Scalar,
}

struct Candidate<const N: usize> {
    theta: f64,
    y: [f64; N],
    watch: Watch,
    new_sign: f64,
}

struct Engine<'a, const N: usize> {
    p: &'a PhysParams,
    opts: &'a FlowOptions<'a>,
    tol: StageTolerance,
    acc: Compensated<N>,
    regime: Regime,
    tau: f64,
    tau0: f64,
    prior: [f64; 2],
    scalar_prior: f64,
    switches: usize,
    uv_turn: f64,
    events: Vec<CrossingEvent>,
    legs: Vec<LegRecord>,
    rows: Vec<TrajectoryRow>,
    r_escape: f64,
}

impl<'a, const N: usize> Engine<'a, N> {
    fn new(
        start: &ParabolicState,
        columns: &[[f64; 4]],
        kind: RegimeKind,
        p: &'a PhysParams,
        opts: &'a FlowOptions<'a>,
    ) -> Result<Self> {
        p.validate()?;
        if !(opts.dtau.is_finite() && opts.dtau != 0.0) {
            return Err(Error::InvalidParams("dtau must be finite and nonzero".into()));
        }
        if start.u * start.u + start.v * start.v == 0.0 {
            return Err(Error::DegenerateOrigin);
        }
        let mut y = [0.0; N];
        y[..4].copy_from_slice(&start.phase());
        y[4] = start.t;
        for (k, col) in columns.iter().enumerate() {
            y[5 + 5 * k..9 + 5 * k].copy_from_slice(col);
        }
        let regime = Regime::enter(kind, start, p);
        reset_dh(&mut y, kind, p);
        let ell_context = opts
            .ell_context
            .unwrap_or_else(|| ell(RegimeKind::Stark, start, p));
        let heading = sign_of(opts.dtau) * (start.v * start.pu + start.u * start.pv);
        let prior = Surface::ALL.map(|s| {
            let g = s.value(start.u, start.v, p.r);
            if g.abs() > EVENT_TOL * p.r {
                sign_of(g)
            } else {
                sign_of(heading)
            }
        });
        let scalar_prior = match opts.scalar_event {
            Some(ev) => {
                let y5 = first5(&y);
                let (g, grad) = ev(&y5);
                if g != 0.0 {
                    sign_of(g)
                } else {
                    let x = nominal_field(kind, regime.h, p.f, &y5);
                    sign_of(opts.dtau * dot5(&grad, &x))
                }
            }
            None => 0.0,
        };
        let mut engine = Self {
            p,
            opts,
            tol: StageTolerance {
                abs: p.tol_abs,
                rel: p.tol_rel,
            },
            acc: Compensated::new(y),
            regime,
            tau: start.tau,
            tau0: start.tau,
            prior,
            scalar_prior,
            switches: 0,
            uv_turn: 0.0,
            events: Vec::new(),
            legs: vec![LegRecord {
                kind,
                h: regime.h,
                ell_start: ell(kind, start, p),
                tau_start: start.tau,
                tau_end: start.tau,
            }],
            rows: Vec::new(),
            r_escape: p.escape_radius(ell_context),
        };
        engine.record(None);
        Ok(engine)
    }

    fn state(&self) -> ParabolicState {
        to_state(&self.acc.y, self.tau)
    }

    fn record(&mut self, event: Option<&'static str>) {
        if !self.opts.record {
            return;
        }
        let s = self.state();
        self.rows.push(TrajectoryRow {
            state: s,
            regime: self.regime.kind,
            h: self.regime.h,
            ell: ell(self.regime.kind, &s, self.p),
            event,
        });
    }

    fn field(&self) -> impl Fn(&[f64; N]) -> [f64; N] {
        let (kind, h, f) = (self.regime.kind, self.regime.h, self.p.f);
        move |y: &[f64; N]| augmented_field::<N>(kind, h, f, y)
    }

    fn run(mut self) -> Result<(FlowResult, [f64; N])> {
        let status = loop {
            let elapsed = (self.tau - self.tau0).abs();
            if elapsed >= self.p.tau_budget || self.switches > self.p.switch_budget {
                break FlowStatus::BudgetExceeded;
            }
            let mut dt = self.opts.dtau;
            let mut last = false;
            if let Some(stop) = self.opts.tau_stop {
                let rem = stop - elapsed;
                if rem <= 0.0 {
                    break FlowStatus::Elapsed;
                }
                if rem <= dt.abs() {
                    dt = rem * sign_of(dt);
                    last = true;
                }
            }
            let y0 = self.acc.y;
            let field = self.field();
            let inc = step_increment(&field, &y0, dt, self.tol)?;
            let mut trial = self.acc;
            trial.add(&inc);
            let y1 = trial.y;

            let hit = self.first_crossing(&field, &y0, &y1, dt)?;
            match hit {
                None => {
                    self.uv_turn += wrap_angle(y1[3].atan2(y1[2]) - y0[3].atan2(y0[2]));
                    self.acc = trial;
                    self.tau += dt;
                    self.record(None);
                    if let Some(st) = self.terminal() {
                        break st;
                    }
                    if last {
                        break FlowStatus::Elapsed;
                    }
                }
                Some(c) => {
                    self.uv_turn += wrap_angle(c.y[3].atan2(c.y[2]) - y0[3].atan2(y0[2]));
                    self.acc = Compensated::new(c.y);
                    self.tau += c.theta;
                    if let Some(st) = self.handle(c)? {
                        break st;
                    }
                    if let Some(st) = self.terminal() {
                        break st;
                    }
                }
            }
        };
        if let Some(leg) = self.legs.last_mut() {
            leg.tau_end = self.tau;
        }
        let result = FlowResult {
            final_state: self.state(),
            final_regime: self.regime,
            events: self.events,
            legs: self.legs,
            status,
            uv_turn: self.uv_turn,
            rows: self.rows,
        };
        Ok((result, self.acc.y))
    }

    fn terminal(&self) -> Option<FlowStatus> {
        let y = &self.acc.y;
        let r = (y[2] * y[2] + y[3] * y[3]) / 2.0;
        if r <= self.p.r {
            Some(FlowStatus::Collision)
        } else if r >= self.r_escape {
            Some(FlowStatus::Escape)
        } else {
            None
        }
    }

    /// Earliest admissible crossing inside the step, updating the prior signs
    /// of ignored guard crossings (those with `u^2 < R`) that precede it.
    fn first_crossing<F>(&mut self, field: &F, y0: &[f64; N], y1: &[f64; N], dt: f64) -> Result<Option<Candidate<N>>>
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let r = self.p.r;
        let mut found: Vec<Candidate<N>> = Vec::new();
        for surface in Surface::ALL {
            let g1 = surface.value(y1[2], y1[3], r);
            if g1 == 0.0 || sign_of(g1) == self.prior[surface.index()] {
                continue;
            }
            let g = |y: &[f64; N]| (surface.value(y[2], y[3], r), y[3] * y[0] + y[2] * y[1], r);
            let (theta, y) = locate(field, y0, dt, self.tol, g, EVENT_TOL * r)?;
            found.push(Candidate {
                theta,
                y,
                watch: Watch::Guard(surface),
                new_sign: sign_of(g1),
            });
        }
        if let Some(ev) = self.opts.scalar_event {
            let (g1, _) = ev(&first5(y1));
            if g1 != 0.0 && sign_of(g1) != self.scalar_prior {
                let (kind, h, f) = (self.regime.kind, self.regime.h, self.p.f);
                let g = |y: &[f64; N]| {
                    let y5 = first5(y);
                    let (g, grad) = ev(&y5);
                    let x = nominal_field(kind, h, f, &y5);
                    let scale = grad.iter().zip(&y5).map(|(a, b)| (a * b).abs()).sum::<f64>() + f64::MIN_POSITIVE;
                    (g, dot5(&grad, &x), scale)
                };
                let scale = {
                    let (_, _, s) = g(y0);
                    s
                };
                let (theta, y) = locate(field, y0, dt, self.tol, g, EVENT_TOL * scale)?;
                found.push(Candidate {
                    theta,
                    y,
                    watch: Watch::Scalar,
                    new_sign: sign_of(g1),
                });
            }
        }
        found.sort_by(|a, b| a.theta.abs().total_cmp(&b.theta.abs()));
        for c in found {
            if let Watch::Guard(surface) = c.watch {
                if c.y[2] * c.y[2] < r {
                    self.prior[surface.index()] = c.new_sign;
                    continue;
                }
            }
            return Ok(Some(c));
        }
        Ok(None)
    }

    fn handle(&mut self, c: Candidate<N>) -> Result<Option<FlowStatus>> {
        let p = self.p;
        let y = c.y;
        let state = self.state();
        let x_old = nominal_field(self.regime.kind, self.regime.h, p.f, &y[..5]);
        let surface = match c.watch {
            Watch::Scalar => {
                let ev = self.opts.scalar_event.expect("scalar candidate without event");
                let (_, grad) = ev(&first5(&y));
                self.project(&grad[..4], &x_old)?;
                self.record(Some("scalar"));
                return Ok(Some(FlowStatus::EventReached));
            }
            Watch::Guard(s) => s,
        };
        let rate = y[3] * y[0] + y[2] * y[1];
        let scale = (y[3] * y[0]).abs() + (y[2] * y[1]).abs();
        if rate.abs() < TANGENCY_TOL * scale {
            return Err(Error::SingularSection { denominator: rate });
        }
        let entering = c.new_sign == surface.inside_sign();
        let direction = if entering { Direction::Entering } else { Direction::Leaving };
        let target = if entering { RegimeKind::Kepler } else { RegimeKind::Stark };
        self.prior[surface.index()] = c.new_sign;
        if target == self.regime.kind {
            // Already in the regime the crossing leads to; nothing to switch.
            self.record(None);
            return Ok(None);
        }
        let grad_s = [0.0, 0.0, y[3], y[2]];
        self.project(&grad_s, &x_old)?;
        let is_return = self.opts.stop_at_section && surface == Surface::Upper && rate > 0.0 && y[2] * y[1] > 0.0;
        let from = self.regime.kind;
        let h_before = self.regime.h;
        let ell_before = self.legs.last().map_or(f64::NAN, |l| l.ell_start);
        let next = Regime::enter(target, &state, p);
        let ell_after = ell(target, &state, p);
        self.events.push(CrossingEvent {
            tau: self.tau,
            state,
            surface,
            direction,
            from,
            h_before,
            h_after: next.h,
            ell_before,
            ell_after,
            delta_h: next.h - energy(from, &state, p),
            delta_ell: ell_after - ell(from, &state, p),
            is_return,
        });
        if let Some(leg) = self.legs.last_mut() {
            leg.tau_end = self.tau;
        }
        self.regime = next;
        reset_dh(&mut self.acc.y, target, p);
        self.legs.push(LegRecord {
            kind: target,
            h: next.h,
            ell_start: ell_after,
            tau_start: self.tau,
            tau_end: self.tau,
        });
        self.switches += 1;
        if is_return {
            self.record(Some("return"));
            return Ok(Some(FlowStatus::ReachedSection));
        }
        self.record(Some(match direction {
            Direction::Entering => "enter",
            Direction::Leaving => "leave",
        }));
        Ok(None)
    }

    /// Projects every tangent column onto `grad . dU = 0` along `x`.
    fn project(&mut self, grad: &[f64], x: &[f64; 5]) -> Result<()> {
        if N == 5 {
            return Ok(());
        }
        let den: f64 = (0..4).map(|i| grad[i] * x[i]).sum();
        let scale: f64 = (0..4).map(|i| (grad[i] * x[i]).abs()).sum();
        if den.abs() < TANGENCY_TOL * scale || den == 0.0 {
            return Err(Error::SingularSection { denominator: den });
        }
        let y = &mut self.acc.y;
        for c in (5..N).step_by(5) {
            let k = (0..4).map(|i| grad[i] * y[c + i]).sum::<f64>() / den;
            for i in 0..4 {
                y[c + i] -= x[i] * k;
            }
        }
        Ok(())
    }
}

fn first5<const N: usize>(y: &[f64; N]) -> [f64; 5] {
    [y[0], y[1], y[2], y[3], y[4]]
}

fn dot5(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sets `dh = grad H . dU` for every tangent column.
fn reset_dh<const N: usize>(y: &mut [f64; N], kind: RegimeKind, p: &PhysParams) {
    if N == 5 {
        return;
    }
    let g = energy_grad(kind, &y[..4], p);
    for c in (5..N).step_by(5) {
        y[c + 4] = (0..4).map(|i| g[i] * y[c + i]).sum();
    }
}

/// Root of a scalar function of the state along a Gauss step from `y0`.
///
/// `g` returns the value, its `tau`-rate, and a round-off scale. The root is
/// bracketed in `[0, dt]` and polished by safeguarded Newton, re-stepping from
/// `y0` with a step of the trial length each time.
fn locate<const N: usize, F, G>(
    field: &F,
    y0: &[f64; N],
    dt: f64,
    tol: StageTolerance,
    g: G,
    accept: f64,
) -> Result<(f64, [f64; N])>
where
    F: Fn(&[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> (f64, f64, f64),
{
    let at = |theta: f64| -> Result<[f64; N]> {
        if theta == 0.0 {
            return Ok(*y0);
        }
        let inc = step_increment(field, y0, theta, tol)?;
        let mut y = *y0;
        for n in 0..N {
            y[n] += inc[n];
        }
        Ok(y)
    };
    let (mut a, mut b) = (0.0, dt);
    let (ga, _, _) = g(y0);
    let y1 = at(dt)?;
    let (gb, _, _) = g(&y1);
    if ga == 0.0 || sign_of(ga) == sign_of(gb) {
        // The start sits on the surface within round-off.
        return Ok((0.0, *y0));
    }
    let mut ga = ga;
    let mut theta = a - ga * (b - a) / (gb - ga);
    let mut best = (f64::INFINITY, 0.0, *y0);
    let mut stale = 0;
    for _ in 0..200 {
        let y = at(theta)?;
        let (gt, rate, scale) = g(&y);
        if gt.abs() < best.0 {
            best = (gt.abs(), theta, y);
            stale = 0;
        } else {
            stale += 1;
        }
        if gt.abs() <= 4.0 * f64::EPSILON * scale || gt == 0.0 {
            return Ok((theta, y));
        }
        if stale >= 4 && best.0 <= accept {
            break;
        }
        if sign_of(gt) == sign_of(ga) {
            a = theta;
            ga = gt;
        } else {
            b = theta;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * dt.abs() {
            break;
        }
        let newton = theta - gt / rate;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        theta = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    if best.0 <= accept {
        Ok((best.1, best.2))
    } else {
        Err(Error::NoConvergence(format!(
            "event location stalled at |g| = {:e}",
            best.0
        )))
    }
}
