//! Three-stage Gauss–Legendre collocation (order 6) over fixed-size states.
//!
//! The step returns the increment rather than the new state so callers can
//! accumulate it with compensated summation.

use crate::error::{Error, Result};

const SQRT15: f64 = 3.872_983_346_207_417;

/// Butcher tableau nodes.
pub const C: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];
/// Butcher tableau weights.
pub const B: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
/// Butcher tableau coefficients.
pub const A: [[f64; 3]; 3] = [
    [5.0 / 36.0, 2.0 / 9.0 - SQRT15 / 15.0, 5.0 / 36.0 - SQRT15 / 30.0],
    [5.0 / 36.0 + SQRT15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - SQRT15 / 24.0],
    [5.0 / 36.0 + SQRT15 / 30.0, 2.0 / 9.0 + SQRT15 / 15.0, 5.0 / 36.0],
];

/// Iteration cap of the implicit stage solver.
pub const MAX_STAGE_ITERATIONS: usize = 50;

/// Stage-solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for StageTolerance {
    fn default() -> Self {
        Self { abs: 1e-300, rel: 1e-15 }
    }
}

/// One Gauss step of size `dt` from `y`; returns `y(t + dt) - y(t)`.
///
/// Stages are solved by fixed-point iteration. Iteration stops once the stage
/// update is within tolerance or has stopped shrinking at the round-off floor.
pub fn step_increment<const N: usize, F>(
    field: &F,
    y: &[f64; N],
    dt: f64,
    tol: StageTolerance,
) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k0 = field(y);
    let mut k = [k0; 3];
    let mut z = [[0.0; N]; 3];
    let mut prev_err = f64::INFINITY;
    let mut converged = false;
    for iter in 0..MAX_STAGE_ITERATIONS {
        let mut err: f64 = 0.0;
        for i in 0..3 {
            let mut zi = [0.0; N];
            for (n, zn) in zi.iter_mut().enumerate() {
                *zn = dt * (A[i][0] * k[0][n] + A[i][1] * k[1][n] + A[i][2] * k[2][n]);
                let scale = tol.abs + tol.rel * y[n].abs().max(zn.abs());
                let d = (*zn - z[i][n]).abs();
                if d > 0.0 {
                    err = err.max(d / scale);
                }
            }
            z[i] = zi;
        }
        if err <= 1.0 {
            converged = true;
            break;
        }
        // Round-off floor: the update no longer contracts.
        if iter >= 2 && err > 0.25 * prev_err && err < 1e7 {
            converged = true;
            break;
        }
        prev_err = err;
        for i in 0..3 {
            let mut yi = *y;
            for n in 0..N {
                yi[n] += z[i][n];
            }
            k[i] = field(&yi);
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "Gauss stage iteration, last error {prev_err:e} tolerance units"
        )));
    }
    let mut inc = [0.0; N];
    for (n, d) in inc.iter_mut().enumerate() {
        *d = dt * (B[0] * k[0][n] + B[1] * k[1][n] + B[2] * k[2][n]);
    }
    Ok(inc)
}

/// State plus Kahan compensation for long fixed-step runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensated<const N: usize> {
    pub y: [f64; N],
    carry: [f64; N],
}

impl<const N: usize> Compensated<N> {
    pub fn new(y: [f64; N]) -> Self {
        Self { y, carry: [0.0; N] }
    }

    pub fn add(&mut self, inc: &[f64; N]) {
        for n in 0..N {
            let d = inc[n] - self.carry[n];
            let t = self.y[n] + d;
            self.carry[n] = (t - self.y[n]) - d;
            self.y[n] = t;
        }
    }

    /// Advances by one Gauss step.
    pub fn step<F>(&mut self, field: &F, dt: f64, tol: StageTolerance) -> Result<()>
    where
        F: Fn(&[f64; N]) -> [f64; N],
    {
        let inc = step_increment(field, &self.y, dt, tol)?;
        self.add(&inc);
        Ok(())
    }
}

/// Single step returning the new state directly.
pub fn step<const N: usize, F>(field: &F, y: &[f64; N], dt: f64, tol: StageTolerance) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let inc = step_increment(field, y, dt, tol)?;
    let mut out = *y;
    for n in 0..N {
        out[n] += inc[n];
    }
    Ok(out)
}
