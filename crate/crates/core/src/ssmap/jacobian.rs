use serde::{Deserialize, Serialize};

use super::{lift, lift_tangents, MapOutcome, OutcomeKind, SectionPoint, SunShadowMap};
use crate::error::{Error, Result};
use crate::propagate::{variational_flow, RegimeKind};

/// Row-major 2x2 matrix; rows are `(u', p_u')`, columns `(u, p_u)`.
pub type Mat2 = [[f64; 2]; 2];

/// Closed-form eigen-decomposition of a real 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigen2 {
    /// Eigenvalues ordered by modulus; `NaN` when the pair is complex.
    pub values: [f64; 2],
    /// Unit eigenvectors matching `values`.
    pub vectors: [[f64; 2]; 2],
    /// `(a - d)^2 + 4 b c`; negative means a complex pair.
    pub discriminant: f64,
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn eigenvector(m: &Mat2, lambda: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = *m;
    let r1 = [b, lambda - a];
    let r2 = [lambda - d, c];
    let pick = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
    if pick == [0.0, 0.0] {
        return if (a - lambda).abs() <= (d - lambda).abs() { [1.0, 0.0] } else { [0.0, 1.0] };
    }
    unit(pick)
}

/// Eigenvalues from the symmetrized discriminant `(a - d)^2 + 4bc`, with the
/// smaller one taken as `det / lambda_big` to avoid cancellation.
pub fn eigen2(m: &Mat2) -> Eigen2 {
    let [[a, b], [c, d]] = *m;
    let disc = (a - d) * (a - d) + 4.0 * b * c;
    if disc < 0.0 {
        return Eigen2 {
            values: [f64::NAN; 2],
            vectors: [[f64::NAN; 2]; 2],
            discriminant: disc,
        };
    }
    let tr = a + d;
    let det = a * d - b * c;
    let big = (tr + tr.signum() * disc.sqrt()) / 2.0;
    let small = if big != 0.0 { det / big } else { 0.0 };
    Eigen2 {
        values: [small, big],
        vectors: [eigenvector(m, small), eigenvector(m, big)],
        discriminant: disc,
    }
}

/// Central differences refined by Richardson extrapolation (Ridders).
fn ridders<F>(mut f: F, h0: f64) -> Result<([f64; 2], [f64; 2])>
where
    F: FnMut(f64) -> Result<[f64; 2]>,
{
    const CON: f64 = 1.4;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    let mut best = [f64::NAN; 2];
    let mut err = [f64::INFINITY; 2];
    let mut tab = vec![[[0.0; 2]; NTAB]; NTAB];
    let mut h = h0;
    for i in 0..NTAB {
        let (fp, fm) = (f(h)?, f(-h)?);
        for k in 0..2 {
            tab[0][i][k] = (fp[k] - fm[k]) / (2.0 * h);
        }
        let mut fac = CON * CON;
        for j in 1..=i {
            for k in 0..2 {
                tab[j][i][k] = (tab[j - 1][i][k] * fac - tab[j - 1][i - 1][k]) / (fac - 1.0);
                let e = (tab[j][i][k] - tab[j - 1][i][k])
                    .abs()
                    .max((tab[j][i][k] - tab[j - 1][i - 1][k]).abs());
                if e <= err[k] {
                    err[k] = e;
                    best[k] = tab[j][i][k];
                }
            }
            fac *= CON * CON;
        }
        let done = (0..2).all(|k| i > 0 && (tab[i][i][k] - tab[i - 1][i - 1][k]).abs() >= SAFE * err[k]);
        if done {
            break;
        }
        h /= CON;
    }
    Ok((best, err))
}

/// How to differentiate the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianMethod {
    Variational,
    FiniteDifference,
}

impl SunShadowMap {
    /// Jacobian from the variational equations with section corrections.
    pub fn jacobian_variational(&self, q: &SectionPoint) -> Result<(Mat2, MapOutcome)> {
        let p = &self.params;
        let start = lift(q, p)?;
        let cols = lift_tangents(&start, q.ell_s, p);
        let opts = self.options(&start, q.ell_s, true);
        let var = variational_flow::<15>(&start, &cols, RegimeKind::Stark, p, &opts)?;
        let outcome = self.outcome(q, &start, var.flow, true);
        if outcome.kind != OutcomeKind::Returned {
            return Err(Error::LostOrbit);
        }
        let c = &var.columns;
        Ok(([[c[0][2], c[1][2]], [c[0][0], c[1][0]]], outcome))
    }

    /// Jacobian by Ridders-extrapolated central differences, with the
    /// per-entry error estimates.
    pub fn jacobian_fd(&self, q: &SectionPoint) -> Result<(Mat2, Mat2)> {
        let p = &self.params;
        let image = |dq: (f64, f64)| -> Result<[f64; 2]> {
            let shifted = SectionPoint::new(q.u + dq.0, q.pu + dq.1, q.ell_s);
            let out = self.apply(&shifted)?;
            let r = out.point.ok_or(Error::LostOrbit)?;
            Ok([r.u, r.pu])
        };
        let hu = 1e-4 * p.section_u_unit();
        let hp = 1e-4 * p.section_pu_unit();
        let (du, eu) = ridders(|h| image((h, 0.0)), hu)?;
        let (dp, ep) = ridders(|h| image((0.0, h)), hp)?;
        Ok(([[du[0], dp[0]], [du[1], dp[1]]], [[eu[0], ep[0]], [eu[1], ep[1]]]))
    }

    pub fn jacobian(&self, q: &SectionPoint, method: JacobianMethod) -> Result<Mat2> {
        match method {
            JacobianMethod::Variational => self.jacobian_variational(q).map(|(m, _)| m),
            JacobianMethod::FiniteDifference => self.jacobian_fd(q).map(|(m, _)| m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_eigen_pair() {
        let m = [[2.0, 1.0], [1.0, 1.0]];
        let e = eigen2(&m);
        let s5 = 5f64.sqrt();
        assert!((e.values[1] - (3.0 + s5) / 2.0).abs() < 1e-14);
        assert!((e.values[0] - (3.0 - s5) / 2.0).abs() < 1e-14);
        for (l, v) in e.values.iter().zip(e.vectors) {
            let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            assert!((mv[0] - l * v[0]).abs() < 1e-13 && (mv[1] - l * v[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn tiny_eigenvalue_keeps_its_digits() {
        // Product 1e-8, sum dominated by the large root.
        let m = [[1e4, 1.0], [0.0, 1e-12]];
        let e = eigen2(&m);
        assert!((e.values[0] - 1e-12).abs() <= 1e-26);
        assert!((e.values[1] - 1e4).abs() <= 1e-10);
    }

    #[test]
    fn rotation_has_complex_pair() {
        let e = eigen2(&[[0.0, -1.0], [1.0, 0.0]]);
        assert!(e.discriminant < 0.0 && e.values[0].is_nan());
    }

    #[test]
    fn ridders_on_a_smooth_function() {
        let (d, err) = ridders(|h| Ok([(1.0 + h).exp(), (2.0 * h).sin()]), 0.1).unwrap();
        assert!((d[0] - 1f64.exp()).abs() < 1e-10 && (d[1] - 2.0).abs() < 1e-10);
        assert!(err[0] < 1e-9);
    }
}
