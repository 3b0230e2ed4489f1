//! Cartesian and parabolic phase-space coordinates and the first integrals
//! of the Kepler and Stark regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;

/// Sign of `u` selected when lifting a Cartesian point to the `(u, v)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn of(u: f64) -> Self {
        if u < 0.0 {
            Branch::Negative
        } else {
            Branch::Positive
        }
    }

    fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
    pub t: f64,
}

impl CartesianState {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py, t: 0.0 }
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn speed(&self) -> f64 {
        self.px.hypot(self.py)
    }
}

/// Phase point `(p_u, p_v, u, v)` with fictitious and physical time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicState {
    pub pu: f64,
    pub pv: f64,
    pub u: f64,
    pub v: f64,
    pub tau: f64,
    pub t: f64,
}

impl ParabolicState {
    pub fn new(pu: f64, pv: f64, u: f64, v: f64) -> Self {
        Self {
            pu,
            pv,
            u,
            v,
            tau: 0.0,
            t: 0.0,
        }
    }

    /// `(p_u, p_v, u, v)` in integrator order.
    pub fn phase(&self) -> [f64; 4] {
        [self.pu, self.pv, self.u, self.v]
    }

    pub fn x(&self) -> f64 {
        (self.u * self.u - self.v * self.v) / 2.0
    }

    pub fn y(&self) -> f64 {
        self.u * self.v
    }

    /// Distance from the origin, `(u^2 + v^2) / 2`.
    pub fn radius(&self) -> f64 {
        (self.u * self.u + self.v * self.v) / 2.0
    }

    /// Cartesian speed, `|p| = sqrt(p_u^2 + p_v^2) / sqrt(u^2 + v^2)`.
    pub fn speed(&self) -> f64 {
        (self.pu.hypot(self.pv)) / (self.u.hypot(self.v))
    }
}

/// Lifts a Cartesian state to parabolic coordinates on the chosen branch.
pub fn to_parabolic(s: &CartesianState, branch: Branch) -> Result<ParabolicState> {
    let r = s.radius();
    if r == 0.0 {
        return Err(Error::DegenerateOrigin);
    }
    // x + r suffers cancellation for x < 0; use y^2 / (r - x) there.
    let xi = if s.x >= 0.0 {
        s.x + r
    } else {
        s.y * s.y / (r - s.x)
    };
    let (u, v) = if xi > 0.0 {
        let u = branch.sign() * xi.sqrt();
        (u, s.y / u)
    } else if s.y == 0.0 {
        (0.0, branch.sign() * (2.0 * r).sqrt())
    } else {
        return Err(Error::BranchUndefined);
    };
    Ok(ParabolicState {
        pu: u * s.px + v * s.py,
        pv: -v * s.px + u * s.py,
        u,
        v,
        tau: 0.0,
        t: s.t,
    })
}

pub fn to_cartesian(s: &ParabolicState) -> Result<CartesianState> {
    let rho = s.u * s.u + s.v * s.v;
    if rho == 0.0 {
        return Err(Error::DegenerateOrigin);
    }
    Ok(CartesianState {
        x: (s.u * s.u - s.v * s.v) / 2.0,
        y: s.u * s.v,
        px: (s.u * s.pu - s.v * s.pv) / rho,
        py: (s.v * s.pu + s.u * s.pv) / rho,
        t: s.t,
    })
}

/// `dt / dtau = u^2 + v^2`, which equals `2 r`.
pub fn time_rate(s: &ParabolicState) -> f64 {
    s.u * s.u + s.v * s.v
}

/// First integrals of both regimes evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralSet {
    pub h_k: f64,
    pub c_k: f64,
    pub a_k: [f64; 2],
    pub ell_k: f64,
    pub h_s: f64,
    pub ell_s: f64,
}

pub fn integrals(s: &ParabolicState, p: &PhysParams) -> Result<IntegralSet> {
    let rho = s.u * s.u + s.v * s.v;
    if rho == 0.0 {
        return Err(Error::DegenerateOrigin);
    }
    let [pu, pv, u, v] = s.phase();
    let h_k = kepler_energy(pu, pv, u, v, p.mu);
    let ell_k = kepler_ell(pu, pv, u, v, p.mu);
    let cart = to_cartesian(s)?;
    let a_k = cartesian::laplace_lenz(&cart, p.mu);
    let out = IntegralSet {
        h_k,
        c_k: (pv * u - pu * v) / 2.0,
        a_k,
        ell_k,
        h_s: stark_energy(pu, pv, u, v, p.mu, p.f),
        ell_s: stark_ell(pu, pv, u, v, p.mu, p.f),
    };
    debug_assert!({
        let scale = (pu * pu + pv * pv) / rho + 2.0 * p.mu / rho + p.f * rho;
        (out.h_s - cartesian::stark_energy(&cart, p.mu, p.f)).abs() <= 1e-9 * scale
    });
    Ok(out)
}

/// Kepler Hamiltonian in parabolic coordinates.
pub fn kepler_energy(pu: f64, pv: f64, u: f64, v: f64, mu: f64) -> f64 {
    let rho = u * u + v * v;
    (pu * pu + pv * pv) / (2.0 * rho) - 2.0 * mu / rho
}

/// Stark Hamiltonian in parabolic coordinates.
pub fn stark_energy(pu: f64, pv: f64, u: f64, v: f64, mu: f64, f: f64) -> f64 {
    kepler_energy(pu, pv, u, v, mu) - f / 2.0 * (u * u - v * v)
}

/// Minus the x-component of the Laplace-Lenz vector.
pub fn kepler_ell(pu: f64, pv: f64, u: f64, v: f64, mu: f64) -> f64 {
    let (u2, v2) = (u * u, v * v);
    let rho = u2 + v2;
    (pu * pu * v2 - pv * pv * u2) / (2.0 * rho) + mu * (u2 - v2) / rho
}

/// Generalised Laplace-Lenz integral of the Stark regime.
pub fn stark_ell(pu: f64, pv: f64, u: f64, v: f64, mu: f64, f: f64) -> f64 {
    kepler_ell(pu, pv, u, v, mu) - f / 2.0 * u * u * v * v
}

/// Gradient of the Kepler (`f = 0`) or Stark Hamiltonian w.r.t. `(p_u, p_v, u, v)`.
pub fn energy_gradient(pu: f64, pv: f64, u: f64, v: f64, mu: f64, f: f64) -> [f64; 4] {
    let rho = u * u + v * v;
    let k = (pu * pu + pv * pv) / (rho * rho) - 4.0 * mu / (rho * rho);
    [pu / rho, pv / rho, -k * u - f * u, -k * v + f * v]
}

/// Integrals written directly in Cartesian coordinates.
pub mod cartesian {
    use super::CartesianState;

    pub fn kepler_energy(s: &CartesianState, mu: f64) -> f64 {
        (s.px * s.px + s.py * s.py) / 2.0 - mu / s.radius()
    }

    pub fn stark_energy(s: &CartesianState, mu: f64, f: f64) -> f64 {
        kepler_energy(s, mu) - f * s.x
    }

    pub fn angular_momentum(s: &CartesianState) -> f64 {
        s.py * s.x - s.px * s.y
    }

    pub fn laplace_lenz(s: &CartesianState, mu: f64) -> [f64; 2] {
        let r = s.radius();
        let w = s.px * s.y - s.py * s.x;
        [-s.py * w - mu * s.x / r, s.px * w - mu * s.y / r]
    }

    pub fn stark_ell(s: &CartesianState, mu: f64, f: f64) -> f64 {
        let r = s.radius();
        let w = s.px * s.y - s.py * s.x;
        s.py * w + mu * s.x / r - f / 2.0 * s.y * s.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p() -> PhysParams {
        PhysParams::default()
    }

    #[test]
    fn axis_point_lifts_to_v_zero() {
        let s = to_parabolic(&CartesianState::new(2.0, 0.0, 0.0, 1.0), Branch::Positive).unwrap();
        assert_eq!((s.u, s.v, s.pu, s.pv), (2.0, 0.0, 0.0, 2.0));
    }

    #[test]
    fn vertical_point_lift() {
        let s = to_parabolic(&CartesianState::new(0.0, 2.0, 1.0, 0.0), Branch::Positive).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(s.u, r2, max_relative = 1e-15);
        assert_relative_eq!(s.v, r2, max_relative = 1e-15);
        assert_relative_eq!(s.pu, r2, max_relative = 1e-15);
        assert_relative_eq!(s.pv, -r2, max_relative = 1e-15);
    }

    #[test]
    fn back_to_cartesian_examples() {
        let c = to_cartesian(&ParabolicState::new(0.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!((c.x, c.y, c.px, c.py), (0.5, 0.0, 0.0, 1.0));
        let r2 = 2f64.sqrt();
        let c = to_cartesian(&ParabolicState::new(r2, -r2, r2, r2)).unwrap();
        assert!(c.x.abs() < 1e-15);
        assert_relative_eq!(c.y, 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.px, 1.0, max_relative = 1e-15);
        assert!(c.py.abs() < 1e-15);
    }

    #[test]
    fn origin_is_rejected() {
        let origin = CartesianState::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(to_parabolic(&origin, Branch::Positive), Err(Error::DegenerateOrigin));
        assert_eq!(
            to_cartesian(&ParabolicState::new(1.0, 1.0, 0.0, 0.0)),
            Err(Error::DegenerateOrigin)
        );
    }

    #[test]
    fn negative_axis_puts_u_at_zero() {
        let s = to_parabolic(&CartesianState::new(-2.0, 0.0, 0.0, 1.0), Branch::Positive).unwrap();
        assert_eq!(s.u, 0.0);
        assert_relative_eq!(s.v, 2.0);
        let c = to_cartesian(&s).unwrap();
        assert_relative_eq!(c.x, -2.0);
        assert_relative_eq!(c.py, 1.0);
    }

    #[test]
    fn circular_orbit_integrals() {
        let r0 = 7000.0;
        let mu = p().mu;
        let c = CartesianState::new(r0, 0.0, 0.0, (mu / r0).sqrt());
        let s = to_parabolic(&c, Branch::Positive).unwrap();
        let i = integrals(&s, &p()).unwrap();
        assert_relative_eq!(i.h_k, -mu / (2.0 * r0), max_relative = 1e-14);
        assert_relative_eq!(i.c_k, (mu * r0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn rest_state_stark_energy() {
        let c = CartesianState::new(3000.0, -5000.0, 0.0, 0.0);
        let s = to_parabolic(&c, Branch::Negative).unwrap();
        let i = integrals(&s, &p()).unwrap();
        let want = -p().mu / c.radius() - p().f * c.x;
        assert_relative_eq!(i.h_s, want, max_relative = 1e-14);
    }

    #[test]
    fn time_rate_is_twice_radius() {
        assert_eq!(time_rate(&ParabolicState::new(0.0, 0.0, 1.0, 0.0)), 1.0);
        assert_eq!(time_rate(&ParabolicState::new(0.0, 0.0, 3.0, 4.0)), 25.0);
    }

    fn rel(a: f64, b: f64, scale: f64) -> f64 {
        (a - b).abs() / scale.max(f64::MIN_POSITIVE)
    }

    prop_compose! {
        fn cart_state()(r in 7e3f64..2e7, th in -3.1f64..3.1, v in 1e-3f64..10.0, ph in -3.1f64..3.1)
            -> CartesianState {
            CartesianState::new(r * th.cos(), r * th.sin(), v * ph.cos(), v * ph.sin())
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip_cartesian(c in cart_state(), neg in any::<bool>()) {
            let b = if neg { Branch::Negative } else { Branch::Positive };
            let s = to_parabolic(&c, b).unwrap();
            prop_assert!((s.x() - c.x).abs() <= 1e-12 * c.radius());
            prop_assert!((s.y() - c.y).abs() <= 1e-12 * c.radius());
            let back = to_cartesian(&s).unwrap();
            let sc = c.radius();
            let sv = c.speed();
            prop_assert!((back.x - c.x).abs() <= 1e-12 * sc);
            prop_assert!((back.y - c.y).abs() <= 1e-12 * sc);
            prop_assert!((back.px - c.px).abs() <= 1e-12 * sv);
            prop_assert!((back.py - c.py).abs() <= 1e-12 * sv);
        }

        #[test]
        fn round_trip_parabolic(pu in -5e3f64..5e3, pv in -5e3f64..5e3, u in 50f64..6e3, v in -6e3f64..6e3, neg in any::<bool>()) {
            let u = if neg { -u } else { u };
            let s = ParabolicState::new(pu, pv, u, v);
            let back = to_parabolic(&to_cartesian(&s).unwrap(), Branch::of(u)).unwrap();
            let sc = u.hypot(v);
            let sp = pu.hypot(pv);
            prop_assert!((back.u - u).abs() <= 1e-12 * sc);
            prop_assert!((back.v - v).abs() <= 1e-12 * sc);
            prop_assert!((back.pu - pu).abs() <= 1e-12 * sp);
            prop_assert!((back.pv - pv).abs() <= 1e-12 * sp);
        }

        #[test]
        fn parabolic_integrals_match_cartesian(c in cart_state()) {
            let pp = p();
            let s = to_parabolic(&c, Branch::Positive).unwrap();
            let i = integrals(&s, &pp).unwrap();
            let escale = c.speed().powi(2) + pp.mu / c.radius() + pp.f * c.radius();
            prop_assert!(rel(i.h_k, cartesian::kepler_energy(&c, pp.mu), escale) <= 1e-12);
            prop_assert!(rel(i.h_s, cartesian::stark_energy(&c, pp.mu, pp.f), escale) <= 1e-12);
            let cscale = c.radius() * c.speed();
            prop_assert!(rel(i.c_k, cartesian::angular_momentum(&c), cscale) <= 1e-12);
            let lscale = cscale * c.speed() + pp.mu + pp.f * c.radius().powi(2);
            prop_assert!(rel(i.ell_s, cartesian::stark_ell(&c, pp.mu, pp.f), lscale) <= 1e-12);
            prop_assert!(rel(i.ell_k, -i.a_k[0], lscale) <= 1e-12);
            let a2 = i.a_k[0].powi(2) + i.a_k[1].powi(2);
            let want = pp.mu.powi(2) + 2.0 * i.h_k * i.c_k.powi(2);
            prop_assert!(rel(a2, want, lscale * lscale) <= 1e-12);
        }

        #[test]
        fn separation_identities(pu in -5e3f64..5e3, pv in -5e3f64..5e3, u in 50f64..6e3, v in -6e3f64..6e3) {
            let pp = p();
            let (mu, f) = (pp.mu, pp.f);
            let hk = kepler_energy(pu, pv, u, v, mu);
            let lk = kepler_ell(pu, pv, u, v, mu);
            let scale = pu * pu + pv * pv + mu + hk.abs() * (u * u + v * v);
            prop_assert!(rel(pu * pu - 2.0 * (hk * u * u + mu), 2.0 * lk, scale) <= 1e-12);
            prop_assert!(rel(pv * pv - 2.0 * (hk * v * v + mu), -2.0 * lk, scale) <= 1e-12);
            let hs = stark_energy(pu, pv, u, v, mu, f);
            let ls = stark_ell(pu, pv, u, v, mu, f);
            let scale = scale + f * (u.powi(4) + v.powi(4));
            prop_assert!(rel(pu * pu - (2.0 * (hs * u * u + mu) + f * u.powi(4)), 2.0 * ls, scale) <= 1e-12);
            prop_assert!(rel(pv * pv - (2.0 * (hs * v * v + mu) - f * v.powi(4)), -2.0 * ls, scale) <= 1e-12);
        }

        #[test]
        fn energy_gradient_matches_differences(pu in -5e3f64..5e3, pv in -5e3f64..5e3, u in 500f64..6e3, v in 500f64..6e3) {
            let pp = p();
            let g = energy_gradient(pu, pv, u, v, pp.mu, pp.f);
            let x = [pu, pv, u, v];
            for k in 0..4 {
                let h = 1e-4 * x[k].abs().max(1.0);
                let mut a = x; a[k] += h;
                let mut b = x; b[k] -= h;
                let fd = (stark_energy(a[0], a[1], a[2], a[3], pp.mu, pp.f)
                    - stark_energy(b[0], b[1], b[2], b[3], pp.mu, pp.f)) / (2.0 * h);
                let scale = g.iter().map(|c| c.abs()).fold(0.0, f64::max);
                prop_assert!((fd - g[k]).abs() <= 1e-6 * scale);
            }
        }

        #[test]
        fn momentum_map_is_bijective(px in -10f64..10.0, py in -10f64..10.0, u in 1f64..100.0, v in -100f64..100.0) {
            let pu = u * px + v * py;
            let pv = -v * px + u * py;
            let c = to_cartesian(&ParabolicState::new(pu, pv, u, v)).unwrap();
            prop_assert!((c.px - px).abs() <= 1e-12 * (1.0 + px.abs()));
            prop_assert!((c.py - py).abs() <= 1e-12 * (1.0 + py.abs()));
        }
    }
}
