use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SectionPoint, SunShadowMap};
use crate::error::{Error, Result};
use crate::spline::{green_area, CubicSpline};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    /// Area enclosed by the initial curve, `pi r_C^2 / sqrt(c)`.
    pub a0: f64,
    /// Area enclosed by the image curve.
    pub a1: f64,
    /// `|A1(m) - A1(m/2)|`, the change from halving the sample.
    pub quadrature_error: f64,
    /// `+1` if the image keeps the orientation of the initial curve.
    pub orientation: i8,
    pub samples: usize,
}

/// Area enclosed by the closed curve through `points` (first point not
/// repeated): chord-length parameter, periodic cubic splines of both
/// coordinates, and the Green formula integrated exactly on each segment.
pub fn curve_area(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidParams("closed curve needs at least 3 points".into()));
    }
    let mut theta = Vec::with_capacity(points.len() + 1);
    let mut u = Vec::with_capacity(points.len() + 1);
    let mut pu = Vec::with_capacity(points.len() + 1);
    let mut acc = 0.0;
    let closed = points.iter().chain(std::iter::once(&points[0]));
    let mut prev: Option<(f64, f64)> = None;
    for &(a, b) in closed {
        if let Some((pa, pb)) = prev {
            let step = (a - pa).hypot(b - pb);
            if step == 0.0 {
                continue;
            }
            acc += step;
        }
        theta.push(acc);
        u.push(a);
        pu.push(b);
        prev = Some((a, b));
    }
    let su = CubicSpline::periodic(&theta, &u)?;
    let sp = CubicSpline::periodic(&theta, &pu)?;
    Ok(green_area(&su, &sp))
}

/// Samples `c p_u^2 + (u - u_C)^2 = r_C^2` with `m` points.
pub fn ellipse_samples(u_c: f64, r_c: f64, c: f64, m: usize, ell_s: f64) -> Vec<SectionPoint> {
    (0..m)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / m as f64;
            SectionPoint::new(u_c + r_c * t.cos(), r_c / c.sqrt() * t.sin(), ell_s)
        })
        .collect()
}

/// Maps the curve `c p_u^2 + (u - u_C)^2 = r_C^2` once and compares the
/// enclosed areas.
pub fn area_experiment(map: &SunShadowMap, u_c: f64, r_c: f64, c: f64, m: usize, ell_s: f64) -> Result<AreaReport> {
    let p = &map.params;
    let r2 = p.r * p.r;
    let den = 2.0 * (p.mu - ell_s) - p.f * r2;
    let min_u = if den > 0.0 {
        ((2.0 * (p.mu + ell_s) + p.f * r2) * r2 / den).powf(0.25)
    } else {
        f64::INFINITY
    };
    if !(u_c > r_c + min_u) || !(r_c > 0.0) || !(c > 0.0) || m < 8 {
        return Err(Error::InvalidParams(format!(
            "area curve needs u_C > r_C + {min_u}, r_C > 0, c > 0 and m >= 8"
        )));
    }
    let samples = ellipse_samples(u_c, r_c, c, m, ell_s);
    let image = |q: &SectionPoint| -> Option<(f64, f64)> {
        map.apply(q).ok().and_then(|o| o.point).map(|r| (r.u, r.pu))
    };
    #[cfg(feature = "parallel")]
    let mapped: Vec<Option<(f64, f64)>> = samples.par_iter().map(image).collect();
    #[cfg(not(feature = "parallel"))]
    let mapped: Vec<Option<(f64, f64)>> = samples.iter().map(image).collect();
    let points = mapped
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(Error::SampleLost(i)))
        .collect::<Result<Vec<_>>>()?;
    let a1 = curve_area(&points)?;
    let half: Vec<(f64, f64)> = points.iter().step_by(2).copied().collect();
    let a1_half = curve_area(&half)?;
    Ok(AreaReport {
        a0: PI * r_c * r_c / c.sqrt(),
        a1: a1.abs(),
        quadrature_error: (a1 - a1_half).abs(),
        orientation: if a1 >= 0.0 { 1 } else { -1 },
        samples: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unmapped_curve_returns_its_own_area() {
        let pts: Vec<(f64, f64)> = ellipse_samples(1250.0, 250.0, 1.0, 2000, 0.0)
            .iter()
            .map(|q| (q.u, q.pu))
            .collect();
        let a = curve_area(&pts).unwrap();
        assert!((a - PI * 250.0 * 250.0).abs() <= 1e-6 * a);
    }

    #[test]
    fn non_circular_ellipse() {
        let pts: Vec<(f64, f64)> = ellipse_samples(10.0, 2.0, 4.0, 500, 0.0)
            .iter()
            .map(|q| (q.u, q.pu))
            .collect();
        let a = curve_area(&pts).unwrap();
        assert!((a - PI * 2.0 * 1.0).abs() <= 1e-6 * a);
    }
}
