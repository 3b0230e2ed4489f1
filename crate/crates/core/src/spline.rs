//! Cubic interpolating splines on strictly increasing knots.

use crate::error::{Error, Result};

/// Piecewise cubic `y = a + b t + c t^2 + d t^3` with `t = x - x_i` on
/// `[x_i, x_{i+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
}

fn check_knots(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() || x.len() < min {
        return Err(Error::InvalidParams(format!(
            "spline needs at least {min} matching knots, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("spline knots must increase strictly".into()));
    }
    Ok(())
}

/// Solves a tridiagonal system in place (Thomas algorithm).
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = sup.first().copied().unwrap_or(0.0) / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / d;
        }
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

impl CubicSpline {
    fn from_moments(x: &[f64], y: &[f64], m: &[f64]) -> Self {
        let coeffs = (0..x.len() - 1)
            .map(|i| {
                let h = x[i + 1] - x[i];
                let b = (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
                [y[i], b, m[i] / 2.0, (m[i + 1] - m[i]) / (6.0 * h)]
            })
            .collect();
        Self {
            knots: x.to_vec(),
            coeffs,
        }
    }

    /// Natural spline: zero second derivative at both ends.
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y, 2)?;
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let inner = n - 2;
            let diag: Vec<f64> = (0..inner).map(|i| 2.0 * (h[i] + h[i + 1])).collect();
            let off: Vec<f64> = (1..inner).map(|i| h[i]).collect();
            let mut rhs: Vec<f64> = (0..inner)
                .map(|i| 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]))
                .collect();
            solve_tridiagonal(&off, &diag, &off, &mut rhs);
            m[1..n - 1].copy_from_slice(&rhs);
        }
        Ok(Self::from_moments(x, y, &m))
    }

    /// Periodic spline through `(x_i, y_i)`; requires `y[0] == y[n-1]`.
    pub fn periodic(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y, 4)?;
        let n = x.len() - 1;
        if y[0] != y[n] {
            return Err(Error::InvalidParams("periodic spline needs y[0] == y[n-1]".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // Unknown moments m_0..m_{n-1}; row i couples i-1, i, i+1 cyclically.
        let slope = |i: usize| (y[i + 1] - y[i]) / h[i];
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                6.0 * (slope(i) - slope(prev))
            })
            .collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[(i + n - 1) % n] + h[i])).collect();
        // Sherman-Morrison on the cyclic tridiagonal system.
        let a_corner = h[n - 1];
        let gamma = -diag[0];
        let mut d = diag.clone();
        d[0] -= gamma;
        d[n - 1] -= a_corner * a_corner / gamma;
        let sub: Vec<f64> = (0..n - 1).map(|i| h[i]).collect();
        let sup = sub.clone();
        let mut xs = rhs;
        solve_tridiagonal(&sub, &d, &sup, &mut xs);
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = a_corner;
        solve_tridiagonal(&sub, &d, &sup, &mut z);
        let fact = (xs[0] + a_corner * xs[n - 1] / gamma) / (1.0 + z[0] + a_corner * z[n - 1] / gamma);
        let mut m: Vec<f64> = xs.iter().zip(&z).map(|(a, b)| a - fact * b).collect();
        m.push(m[0]);
        Ok(Self::from_moments(x, y, &m))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Polynomial coefficients of segment `i` in the local variable.
    pub fn segment(&self, i: usize) -> [f64; 4] {
        self.coeffs[i]
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.coeffs.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let [a, b, c, d] = self.coeffs[i];
        let t = x - self.knots[i];
        a + t * (b + t * (c + t * d))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let [_, b, c, d] = self.coeffs[i];
        let t = x - self.knots[i];
        b + t * (2.0 * c + 3.0 * t * d)
    }
}

/// Signed area enclosed by the closed parametric spline curve `(u, p)`
/// sharing knots: `(1/2) int (u p' - p u') d theta`, exact per segment.
pub fn green_area(u: &CubicSpline, p: &CubicSpline) -> f64 {
    // Three-point Gauss-Legendre is exact for the degree-5 integrand.
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let k = u.knots();
    let mut sum = 0.0;
    for i in 0..k.len() - 1 {
        let (a, b) = (k[i], k[i + 1]);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        let seg: f64 = NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&z, w)| {
                let t = mid + half * z;
                w * (u.eval(t) * p.derivative(t) - p.eval(t) * u.derivative(t))
            })
            .sum();
        sum += seg * half;
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn natural_spline_reproduces_lines_and_knots() {
        let x = [0.0, 0.5, 1.7, 2.0, 3.1];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * t).collect();
        let s = CubicSpline::natural(&x, &y).unwrap();
        for t in [0.1, 1.0, 2.5, 3.0] {
            assert!((s.eval(t) - (3.0 - 2.0 * t)).abs() < 1e-13);
            assert!((s.derivative(t) + 2.0).abs() < 1e-13);
        }
        let y2 = [1.0, -2.0, 0.3, 4.0, 0.0];
        let s2 = CubicSpline::natural(&x, &y2).unwrap();
        for (a, b) in x.iter().zip(y2) {
            assert!((s2.eval(*a) - b).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_spline_matches_a_sine() {
        let n = 64;
        let x: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let mut y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        y[n] = y[0];
        let s = CubicSpline::periodic(&x, &y).unwrap();
        for t in [0.05, 1.3, 3.0, 6.2] {
            assert!((s.eval(t) - t.sin()).abs() < 1e-6);
            assert!((s.derivative(t) - t.cos()).abs() < 1e-4);
        }
        // Derivatives match across the seam.
        assert!((s.derivative(0.0) - s.derivative(2.0 * PI - 1e-12)).abs() < 1e-9);
    }

    #[test]
    fn circle_area_by_green() {
        let n = 400;
        let th: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let mut u: Vec<f64> = th.iter().map(|t| 1250.0 + 250.0 * t.cos()).collect();
        let mut p: Vec<f64> = th.iter().map(|t| 250.0 * t.sin()).collect();
        u[n] = u[0];
        p[n] = p[0];
        let su = CubicSpline::periodic(&th, &u).unwrap();
        let sp = CubicSpline::periodic(&th, &p).unwrap();
        let a = green_area(&su, &sp);
        assert!((a - PI * 250.0 * 250.0).abs() < 1e-6 * a);
    }
}
