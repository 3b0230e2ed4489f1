use serde::{Deserialize, Serialize};

use super::{eigen2, Eigen2, Mat2, SectionPoint, SunShadowMap};
use crate::error::{Error, Result};

const MAX_NEWTON: usize = 50;
/// Extra Newton steps taken after convergence while the residual drops.
const POLISH_STEPS: usize = 3;
/// Residual `|S(q) - q|` in section units accepted as converged.
pub const FIXED_POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub point: SectionPoint,
    pub jacobian: Mat2,
    pub eigen: Eigen2,
    /// `|S(q) - q|` in section units at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub winding: i32,
}

/// Full Newton step for `S(q) - q = 0` from the image and Jacobian at `q`.
fn newton_step(q: &SectionPoint, img: &SectionPoint, jac: &Mat2) -> SectionPoint {
    let f = [img.u - q.u, img.pu - q.pu];
    let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    SectionPoint::new(
        q.u - (a[1][1] * f[0] - a[0][1] * f[1]) / det,
        q.pu - (-a[1][0] * f[0] + a[0][0] * f[1]) / det,
        q.ell_s,
    )
}

/// Newton iteration on `S(q) - q` with the variational Jacobian.
pub fn find_fixed_point(map: &SunShadowMap, seed: &SectionPoint) -> Result<FixedPoint> {
    let p = &map.params;
    let residual_at = |q: &SectionPoint| -> Result<(SectionPoint, Mat2, i32)> {
        let (jac, out) = map.jacobian_variational(q)?;
        let img = out.point.ok_or(Error::LostOrbit)?;
        Ok((img, jac, out.winding.unwrap_or(0)))
    };
    let mut q = *seed;
    let (mut img, mut jac, mut winding) = residual_at(&q).map_err(|_| Error::LostOrbit)?;
    for it in 0..MAX_NEWTON {
        let res = p.section_distance(img.pair(), q.pair());
        if res <= FIXED_POINT_TOL {
            let mut best = (q, img, jac, winding, res);
            for _ in 0..POLISH_STEPS {
                let (bq, bi, bj, _, _) = best;
                let trial = newton_step(&bq, &bi, &bj);
                match residual_at(&trial) {
                    Ok(r) => {
                        let tr = p.section_distance(r.0.pair(), trial.pair());
                        if tr < best.4 {
                            best = (trial, r.0, r.1, r.2, tr);
                        } else {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            let (q, _, jac, winding, res) = best;
            return Ok(FixedPoint {
                point: q,
                jacobian: jac,
                eigen: eigen2(&jac),
                residual: res,
                iterations: it,
                winding,
            });
        }
        let full = newton_step(&q, &img, &jac);
        if !full.u.is_finite() || !full.pu.is_finite() {
            return Err(Error::NoConvergence("singular Newton matrix".into()));
        }
        let step = [full.u - q.u, full.pu - q.pu];
        // Halve the step while the trial leaves the domain or grows the residual.
        let mut scale = 1.0;
        let next = loop {
            let trial = SectionPoint::new(q.u + scale * step[0], q.pu + scale * step[1], q.ell_s);
            if let Ok(r) = residual_at(&trial) {
                if p.section_distance(r.0.pair(), trial.pair()) < res || scale < 1e-3 {
                    break Some((trial, r));
                }
            }
            scale /= 2.0;
            if scale < 1e-3 {
                break None;
            }
        };
        let (trial, r) = next.ok_or(Error::LostOrbit)?;
        q = trial;
        (img, jac, winding) = r;
    }
    Err(Error::NoConvergence(format!(
        "fixed point residual {:e} after {MAX_NEWTON} Newton steps",
        p.section_distance(img.pair(), q.pair())
    )))
}
