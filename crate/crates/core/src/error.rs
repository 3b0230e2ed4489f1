use thiserror::Error;

/// Reasons a section point is excluded by the closed-form domain test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ForbiddenReason {
    /// `|u| < sqrt(R)`: the point is not on the shadow edge.
    OffSection,
    /// The lifted `p_v^2` is not positive (includes the tangential boundary).
    NegativeMomentum,
    /// Second/fourth quadrant point that cannot leave the shadow outwards.
    QuadrantOrientation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("state is at the origin, parabolic coordinates are degenerate")]
    DegenerateOrigin,
    #[error("branch undefined: u = 0 with y != 0")]
    BranchUndefined,
    #[error("u-motion is unbounded for these integrals")]
    UnboundedU,
    #[error("value {value} outside the admissible range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("ratio {p}:{q} must be < 1")]
    InvalidRatio { p: u32, q: u32 },
    #[error("no root found: {0}")]
    NotFound(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("tangential crossing of the shadow boundary (transversality {denominator:e})")]
    SingularSection { denominator: f64 },
    #[error("no admissible exit root of the transit polynomial")]
    NoExitRoot,
    #[error("x_T is complex: x0^2 - a_k R^2 = {0:e} < 0")]
    ComplexXT(f64),
    #[error("energy outside region IV unbounded branch: {0}")]
    OutOfRegion(String),
    #[error("tau_u - tau_v does not change sign on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("section point is forbidden: {0:?}")]
    ForbiddenPoint(ForbiddenReason),
    #[error("iterate left the admissible set")]
    LostOrbit,
    #[error("curve sample {0} did not return to the section")]
    SampleLost(usize),
    #[error("initial primary is not in the linear regime (defect ratio {0:e})")]
    LinearRegimeViolated(f64),
    #[error("all correction candidates lost at point {0}")]
    AllCandidatesLost(usize),
    #[error("branch extinct at generation {0}")]
    BranchExtinct(usize),
    #[error("primary size {n} exceeds the doubling-law limit {max}")]
    PrimaryTooLong { n: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
