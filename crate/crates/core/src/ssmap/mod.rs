//! The Sun-shadow return map on the upper shadow edge.

mod area;
mod fixed;
mod jacobian;
mod scan;
mod section;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use area::{area_experiment, curve_area, ellipse_samples, AreaReport};
pub use fixed::{find_fixed_point, FixedPoint, FIXED_POINT_TOL};
pub use jacobian::{eigen2, Eigen2, JacobianMethod, Mat2};
pub use scan::{scan_domain, write_grid_csv, GridCell, GridSpec};
pub use section::{forbidden_class, lift, lift_tangents, lifted_pv_squared, on_section, SectionPoint};

use crate::coords::ParabolicState;
use crate::error::{Error, ForbiddenReason, Result};
use crate::params::PhysParams;
use crate::propagate::{default_step, sunshadow_flow, CrossingEvent, FlowOptions, FlowResult, FlowStatus, RegimeKind};

/// How one application of the map ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Returned,
    Forbidden(ForbiddenReason),
    Collision,
    Escape,
    Budget,
    Singular,
}

impl OutcomeKind {
    /// Grid label: `D`, `F`, `C`, `INF`, `BUDGET` or `SING`.
    pub fn label(self) -> &'static str {
        match self {
            Self::Returned => "D",
            Self::Forbidden(_) => "F",
            Self::Collision => "C",
            Self::Escape => "INF",
            Self::Budget => "BUDGET",
            Self::Singular => "SING",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapOutcome {
    pub kind: OutcomeKind,
    /// Image point when `kind` is `Returned`.
    pub point: Option<SectionPoint>,
    /// Turns of the position vector around the origin along the trajectory
    /// closed by the chord back to the start; set when `kind` is `Returned`.
    pub winding: Option<i32>,
    /// Physical time of the trajectory, seconds (negative for the inverse).
    pub elapsed_t: f64,
    pub events: Vec<CrossingEvent>,
    /// Final phase point of the flow.
    pub final_state: Option<ParabolicState>,
}

impl MapOutcome {
    fn forbidden(reason: ForbiddenReason) -> Self {
        Self {
            kind: OutcomeKind::Forbidden(reason),
            point: None,
            winding: None,
            elapsed_t: 0.0,
            events: Vec::new(),
            final_state: None,
        }
    }

    fn singular() -> Self {
        Self {
            kind: OutcomeKind::Singular,
            ..Self::forbidden(ForbiddenReason::OffSection)
        }
    }

    pub fn returned(&self) -> Option<SectionPoint> {
        self.point
    }
}

/// Map context: physical parameters plus the step refinement factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunShadowMap {
    pub params: PhysParams,
    /// Multiplies the default fixed step; `0.5` halves it.
    pub step_scale: f64,
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Integer winding of a trajectory from `start` to `end` whose `(u, v)`
/// angle turned by `uv_turn`, closed by the straight chord `end -> start`.
pub fn winding_number(uv_turn: f64, start: &ParabolicState, end: &ParabolicState) -> i32 {
    let angle = |s: &ParabolicState| s.y().atan2(s.x());
    let total = 2.0 * uv_turn + wrap(angle(start) - angle(end));
    (total / (2.0 * PI)).round() as i32
}

impl SunShadowMap {
    pub fn new(params: PhysParams) -> Self {
        Self {
            params,
            step_scale: 1.0,
        }
    }

    pub fn with_step_scale(self, step_scale: f64) -> Self {
        Self { step_scale, ..self }
    }

    /// Fixed step used from the lifted start `s`.
    pub fn step(&self, s: &ParabolicState) -> f64 {
        default_step(s, &self.params) * self.step_scale
    }

    /// Flow options for one application in the given time direction.
    pub fn options(&self, s: &ParabolicState, ell_s: f64, forward: bool) -> FlowOptions<'static> {
        let dt = self.step(s);
        let mut opts = FlowOptions::new(if forward { dt } else { -dt });
        opts.stop_at_section = true;
        opts.ell_context = Some(ell_s);
        opts
    }

    fn outcome(&self, q: &SectionPoint, start: &ParabolicState, flow: FlowResult, forward: bool) -> MapOutcome {
        let kind = match flow.status {
            FlowStatus::ReachedSection => OutcomeKind::Returned,
            FlowStatus::Collision => OutcomeKind::Collision,
            FlowStatus::Escape => OutcomeKind::Escape,
            FlowStatus::BudgetExceeded | FlowStatus::Elapsed | FlowStatus::EventReached => OutcomeKind::Budget,
        };
        let end = flow.final_state;
        let (point, winding) = if kind == OutcomeKind::Returned {
            let w = winding_number(flow.uv_turn, start, &end);
            (
                Some(SectionPoint::new(end.u, end.pu, q.ell_s)),
                Some(if forward { w } else { -w }),
            )
        } else {
            (None, None)
        };
        MapOutcome {
            kind,
            point,
            winding,
            elapsed_t: end.t - start.t,
            events: flow.events,
            final_state: Some(end),
        }
    }

    fn run(&self, q: &SectionPoint, forward: bool) -> Result<MapOutcome> {
        let start = match lift(q, &self.params) {
            Ok(s) => s,
            Err(Error::ForbiddenPoint(reason)) => return Ok(MapOutcome::forbidden(reason)),
            Err(e) => return Err(e),
        };
        let opts = self.options(&start, q.ell_s, forward);
        // Forward flows leave the shadow into the Stark regime; backward flows
        // re-enter the shadow and run the Kepler arc in reverse.
        let kind = if forward { RegimeKind::Stark } else { RegimeKind::Kepler };
        match sunshadow_flow(&start, kind, &self.params, &opts) {
            Ok(flow) => Ok(self.outcome(q, &start, flow, forward)),
            Err(Error::SingularSection { .. }) => Ok(MapOutcome::singular()),
            Err(e) => Err(e),
        }
    }

    /// One forward application.
    pub fn apply(&self, q: &SectionPoint) -> Result<MapOutcome> {
        self.run(q, true)
    }

    /// One backward application: the section point whose forward image is `q`.
    pub fn apply_inverse(&self, q: &SectionPoint) -> Result<MapOutcome> {
        self.run(q, false)
    }

    /// Iterates the map up to `n` times, stopping at the first non-return.
    pub fn iterate(&self, q: &SectionPoint, n: usize) -> Result<(Vec<SectionPoint>, MapOutcome)> {
        let mut orbit = vec![*q];
        let mut cur = *q;
        let mut last = None;
        for _ in 0..n {
            let out = self.apply(&cur)?;
            match out.point {
                Some(next) => {
                    orbit.push(next);
                    cur = next;
                    last = Some(out);
                }
                None => return Ok((orbit, out)),
            }
        }
        let last = last.unwrap_or_else(|| MapOutcome {
            kind: OutcomeKind::Returned,
            point: Some(*q),
            winding: Some(0),
            elapsed_t: 0.0,
            events: Vec::new(),
            final_state: None,
        });
        Ok((orbit, last))
    }
}
