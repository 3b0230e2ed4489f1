use serde::{Deserialize, Serialize};

use crate::coords::{cartesian, kepler_ell, kepler_energy, to_cartesian, ParabolicState};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::special::{poly_eval, real_roots_in, root_bound};

/// Exit state of a Kepler arc across the shadow, found in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitSolution {
    /// Exit phase point on `uv = R`; `tau` and `t` are copied from the entry.
    pub exit: ParabolicState,
    pub root_u: f64,
    /// Polynomial residual at the root divided by the sum of term magnitudes.
    pub residual_scaled: f64,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exit polynomial in `xi = u^2` (ascending coefficients) for Kepler energy
/// `h`, angular momentum `c` and `ell_k`.
///
/// It follows from squaring `p_v u - p_u v = 2c` twice after substituting
/// the separation identities on `uv = R`; its roots in `u` come in `+-`
/// pairs, so the degree-eight polynomial in `u` is this quartic in `u^2`.
pub fn transit_polynomial(h: f64, c: f64, ell_k: f64, p: &PhysParams) -> [f64; 5] {
    let (mu, r2) = (p.mu, p.r * p.r);
    let s = [2.0 * (mu + ell_k) * r2, 4.0 * h * r2 - 4.0 * c * c, 2.0 * (mu - ell_k)];
    let q1 = [2.0 * (mu + ell_k), 2.0 * h];
    let q2 = [2.0 * h * r2, 2.0 * (mu - ell_k)];
    let q = poly_mul(&poly_mul(&[0.0, 4.0 * r2], &q1), &q2);
    let s2 = poly_mul(&s, &s);
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = s2[k] - q.get(k).copied().unwrap_or(0.0);
    }
    out
}

fn scaled_residual(coeffs: &[f64; 5], xi: f64) -> f64 {
    let mag: f64 = coeffs.iter().enumerate().map(|(k, c)| (c * xi.powi(k as i32)).abs()).sum();
    poly_eval(coeffs, xi).abs() / mag.max(f64::MIN_POSITIVE)
}

fn polish(coeffs: &[f64; 5], mut xi: f64) -> f64 {
    let d = [coeffs[1], 2.0 * coeffs[2], 3.0 * coeffs[3], 4.0 * coeffs[4]];
    for _ in 0..4 {
        let fp = poly_eval(&d, xi);
        if fp == 0.0 {
            break;
        }
        let next = xi - poly_eval(coeffs, xi) / fp;
        if !next.is_finite() || scaled_residual(coeffs, next) >= scaled_residual(coeffs, xi) {
            break;
        }
        xi = next;
    }
    xi
}

/// Closed-form exit through `uv = R` of a Kepler arc entering on `uv = -R`.
///
/// The physical candidate is the one matching the angular momentum, the
/// outward crossing direction and the `y` component of the Laplace-Lenz
/// vector. The caller must know the arc reaches `uv = R`; otherwise
/// `NoExitRoot` is returned and the numeric flow should be used.
pub fn kepler_transit_analytic(entry: &ParabolicState, p: &PhysParams) -> Result<TransitSolution> {
    let (pu, pv, u, v) = (entry.pu, entry.pv, entry.u, entry.v);
    let r = p.r;
    if (u * v + r).abs() > 1e-9 * r || u * u < r || v * pu + u * pv <= 0.0 {
        return Err(Error::InvalidParams(
            "entry must lie on uv = -R with u^2 >= R, moving into the shadow".into(),
        ));
    }
    let h = kepler_energy(pu, pv, u, v, p.mu);
    let ell_k = kepler_ell(pu, pv, u, v, p.mu);
    let c = (pv * u - pu * v) / 2.0;
    let a_y = cartesian::laplace_lenz(&to_cartesian(entry)?, p.mu)[1];
    let coeffs = transit_polynomial(h, c, ell_k, p);
    let hi = root_bound(&coeffs).max(2.0 * r);
    let side = u.signum();
    let mut best: Option<(f64, TransitSolution)> = None;
    for xi in real_roots_in(&coeffs, r, hi) {
        let xi = polish(&coeffs, xi);
        let ue = side * xi.sqrt();
        let ve = r / ue;
        let pu2 = 2.0 * h * xi + 2.0 * (p.mu + ell_k);
        let pv2 = 2.0 * h * ve * ve + 2.0 * (p.mu - ell_k);
        let floor = 1e-9 * (2.0 * h.abs() * xi + 2.0 * (p.mu + ell_k.abs()));
        if pu2 < -floor || pv2 < -floor {
            continue;
        }
        let (apu, apv) = (pu2.max(0.0).sqrt(), pv2.max(0.0).sqrt());
        for (spu, spv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let cand = ParabolicState {
                pu: spu * apu,
                pv: spv * apv,
                u: ue,
                v: ve,
                tau: entry.tau,
                t: entry.t,
            };
            if ve * cand.pu + ue * cand.pv <= 0.0 {
                continue;
            }
            let c_res = ((cand.pv * ue - cand.pu * ve) / 2.0 - c).abs()
                / ((cand.pv * ue).abs() + (cand.pu * ve).abs()).max(f64::MIN_POSITIVE);
            let ay = cartesian::laplace_lenz(&to_cartesian(&cand)?, p.mu)[1];
            let a_res = (ay - a_y).abs() / (p.mu + ell_k.abs());
            let score = c_res.max(a_res);
            if score > 1e-6 {
                continue;
            }
            let sol = TransitSolution {
                exit: cand,
                root_u: ue,
                residual_scaled: scaled_residual(&coeffs, xi),
            };
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, sol));
            }
        }
    }
    best.map(|(_, s)| s).ok_or(Error::NoExitRoot)
}
