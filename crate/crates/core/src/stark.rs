//! Closed-form structure of the pure Stark problem in separated coordinates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::special::{agm, bisect, stable_quadratic};

/// Relative tolerance for boundary membership in `(ell/mu, h/sqrt(f mu))` units.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Nature of one root `u_i = sqrt(xi_i)` (or `v_i = sqrt(eta_i)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootKind {
    /// Real and positive.
    Positive,
    Zero,
    /// Purely imaginary: the squared root is real and negative.
    Imaginary,
    /// The squared root itself is complex.
    NonReal,
}

impl RootKind {
    pub fn is_real(self) -> bool {
        matches!(self, RootKind::Positive | RootKind::Zero)
    }
}

/// Roots of `U(u) = f u^4 + 2 h u^2 + 2(mu + ell)` and
/// `V(v) = -f v^4 + 2 h v^2 + 2(mu - ell)` in the squared variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticStructure {
    pub ell_s: f64,
    pub h_s: f64,
    pub f: f64,
    pub mu: f64,
    pub xi: [Complex64; 2],
    pub eta: [Complex64; 2],
    pub u_roots: [Complex64; 2],
    pub v_roots: [Complex64; 2],
    pub u_kinds: [RootKind; 2],
    pub v_kinds: [RootKind; 2],
}

impl QuarticStructure {
    pub fn xi1(&self) -> f64 {
        self.xi[0].re
    }
    pub fn xi2(&self) -> f64 {
        self.xi[1].re
    }
    pub fn eta1(&self) -> f64 {
        self.eta[0].re
    }
    pub fn eta2(&self) -> f64 {
        self.eta[1].re
    }

    pub fn u_poly(&self, u: f64) -> f64 {
        let u2 = u * u;
        self.f * u2 * u2 + 2.0 * self.h_s * u2 + 2.0 * (self.mu + self.ell_s)
    }

    pub fn v_poly(&self, v: f64) -> f64 {
        let v2 = v * v;
        -self.f * v2 * v2 + 2.0 * self.h_s * v2 + 2.0 * (self.mu - self.ell_s)
    }

    /// `U` from the factored form `f (u^2 - xi1)(u^2 - xi2)`.
    pub fn u_factored(&self, u: Complex64) -> Complex64 {
        let u2 = u * u;
        self.f * (u2 - self.xi[0]) * (u2 - self.xi[1])
    }

    /// `V` from the factored form `-f (v^2 - eta1)(v^2 - eta2)`.
    pub fn v_factored(&self, v: Complex64) -> Complex64 {
        let v2 = v * v;
        -self.f * (v2 - self.eta[0]) * (v2 - self.eta[1])
    }
}

/// Roots of `z^2 - 2 b z + c` with the first root carrying `+sqrt`.
fn squared_roots(b: f64, c: f64) -> ([Complex64; 2], [RootKind; 2]) {
    let scale = b * b + c.abs();
    let (r1, r2, disc) = stable_quadratic(b, c);
    if disc < -CLASSIFY_TOL * scale {
        let im = (-disc).sqrt();
        let z = [Complex64::new(b, im), Complex64::new(b, -im)];
        return (z, [RootKind::NonReal; 2]);
    }
    let (r1, r2) = if disc < 0.0 { (b, b) } else { (r1, r2) };
    let zero_tol = CLASSIFY_TOL * scale.sqrt();
    let kind = |r: f64| {
        if r.abs() <= zero_tol {
            RootKind::Zero
        } else if r > 0.0 {
            RootKind::Positive
        } else {
            RootKind::Imaginary
        }
    };
    ([Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)], [kind(r1), kind(r2)])
}

pub fn quartic_structure(ell_s: f64, h_s: f64, p: &PhysParams) -> QuarticStructure {
    let f = p.f;
    let (xi, u_kinds) = squared_roots(-h_s / f, 2.0 * (p.mu + ell_s) / f);
    let (eta, v_kinds) = squared_roots(h_s / f, -2.0 * (p.mu - ell_s) / f);
    QuarticStructure {
        ell_s,
        h_s,
        f,
        mu: p.mu,
        xi,
        eta,
        u_roots: [xi[0].sqrt(), xi[1].sqrt()],
        v_roots: [eta[0].sqrt(), eta[1].sqrt()],
        u_kinds,
        v_kinds,
    }
}

/// Regions of the `(ell_s, h_s / sqrt f)` plane and their boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    /// `ell = -mu`, `h > 0`.
    BoundaryOneTwo,
    /// `ell = -mu`, `h < 0`.
    BoundaryOneFour,
    /// `-mu < ell < mu`, `h / sqrt f = -sqrt(2(mu + ell))`: the brake family.
    BoundaryTwoFour,
    /// `ell = mu`, `h > 0`.
    BoundaryTwoThree,
    /// `ell = mu`, `-2 sqrt(mu) < h / sqrt f < 0`.
    EdgeTwo,
    /// `ell = mu`, `h / sqrt f < -2 sqrt(mu)`.
    EdgeFour,
    /// `ell > mu`, `h / sqrt f = sqrt(2(ell - mu))`.
    EdgeThree,
    /// `ell = -mu`, `h = 0`.
    PointOneTwoFour,
    /// `ell = mu`, `h = 0`.
    PointTwoThree,
    /// `ell = mu`, `h / sqrt f = -2 sqrt(mu)`.
    PointTwoFour,
    /// No motion is possible.
    Forbidden,
}

impl Region {
    pub const ALL: [Region; 15] = [
        Region::I,
        Region::II,
        Region::III,
        Region::IV,
        Region::BoundaryOneTwo,
        Region::BoundaryOneFour,
        Region::BoundaryTwoFour,
        Region::BoundaryTwoThree,
        Region::EdgeTwo,
        Region::EdgeFour,
        Region::EdgeThree,
        Region::PointOneTwoFour,
        Region::PointTwoThree,
        Region::PointTwoFour,
        Region::Forbidden,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::BoundaryOneTwo => "B_I_II",
            Region::BoundaryOneFour => "B_I_IV",
            Region::BoundaryTwoFour => "B_II_IV",
            Region::BoundaryTwoThree => "B_II_III",
            Region::EdgeTwo => "B_II_edge",
            Region::EdgeFour => "B_IV_edge",
            Region::EdgeThree => "B_III_edge",
            Region::PointOneTwoFour => "P_I_II_IV",
            Region::PointTwoThree => "P_II_III",
            Region::PointTwoFour => "P_II_IV",
            Region::Forbidden => "Forbidden",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Region::I => "unbounded, self-intersecting, not encircling the origin",
            Region::II => "unbounded, self-intersecting, encircling the origin",
            Region::III => "unbounded, not self-intersecting",
            Region::IV => "bounded, or unbounded and not encircling the origin",
            Region::BoundaryOneTwo => "periodic brake orbit through the origin, or asymptotic to it",
            Region::BoundaryOneFour => "brake orbit through the origin, or unbounded",
            Region::BoundaryTwoFour => "brake orbit of the u = const family, or asymptotic to it",
            Region::BoundaryTwoThree => "unbounded; or unbounded on the positive x axis",
            Region::EdgeTwo => "unbounded on the positive x axis",
            Region::EdgeFour => "brake orbit on the x axis, or unbounded on it",
            Region::EdgeThree => "unbounded parabolic orbit with constant v",
            Region::PointOneTwoFour => "periodic brake orbit through the origin, or asymptotic to it",
            Region::PointTwoThree => "unbounded on the positive x axis",
            Region::PointTwoFour => "fixed point, or asymptotic to it along the x axis",
            Region::Forbidden => "no motion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionClass {
    pub region: Region,
    /// Region IV admits the bounded `u^2 <= xi2` branch.
    pub bounded_u_branch_exists: bool,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= CLASSIFY_TOL * 1f64.max(a.abs()).max(b.abs())
}

pub fn classify(ell_s: f64, h_s: f64, p: &PhysParams) -> RegionClass {
    let a = ell_s / p.mu;
    let b = h_s / (p.f * p.mu).sqrt();
    let region = if near(a, -1.0) {
        if near(b, 0.0) {
            Region::PointOneTwoFour
        } else if b > 0.0 {
            Region::BoundaryOneTwo
        } else {
            Region::BoundaryOneFour
        }
    } else if a < -1.0 {
        Region::I
    } else if near(a, 1.0) {
        if near(b, 0.0) {
            Region::PointTwoThree
        } else if near(b, -2.0) {
            Region::PointTwoFour
        } else if b > 0.0 {
            Region::BoundaryTwoThree
        } else if b > -2.0 {
            Region::EdgeTwo
        } else {
            Region::EdgeFour
        }
    } else if a < 1.0 {
        let edge = -(2.0 * (1.0 + a)).sqrt();
        if near(b, edge) {
            Region::BoundaryTwoFour
        } else if b > edge {
            Region::II
        } else {
            Region::IV
        }
    } else {
        let edge = (2.0 * (a - 1.0)).sqrt();
        if near(b, edge) {
            Region::EdgeThree
        } else if b > edge {
            Region::III
        } else {
            Region::Forbidden
        }
    };
    RegionClass {
        region,
        bounded_u_branch_exists: region == Region::IV,
    }
}

/// Cartesian zero-velocity points; empty outside regions I and IV.
pub fn zero_velocity_points(ell_s: f64, h_s: f64, p: &PhysParams) -> Vec<(f64, f64)> {
    let q = quartic_structure(ell_s, h_s, p);
    let eta1 = q.eta1();
    let xis: &[f64] = match classify(ell_s, h_s, p).region {
        Region::I => &[q.xi1()],
        Region::IV => &[q.xi1(), q.xi2()],
        _ => &[],
    };
    let mut out = Vec::with_capacity(2 * xis.len());
    for &xi in xis {
        let x = xi / 2.0 - eta1 / 2.0;
        let y = (xi * eta1).sqrt();
        out.push((x, y));
        out.push((x, -y));
    }
    debug_assert!(out.iter().all(|&(x, y)| {
        let r = x.hypot(y);
        (h_s + p.mu / r + p.f * x).abs() <= 1e-8 * (p.mu / r + p.f * r + h_s.abs())
    }));
    out
}

/// Period in `tau` of the bounded `u` oscillation (region IV, `u^2 <= xi2`).
pub fn period_u(ell_s: f64, h_s: f64, p: &PhysParams) -> Result<f64> {
    if classify(ell_s, h_s, p).region != Region::IV {
        return Err(Error::UnboundedU);
    }
    let q = quartic_structure(ell_s, h_s, p);
    let (xi1, xi2) = (q.xi1(), q.xi2());
    Ok(2.0 * PI / (p.f.sqrt() * agm(xi1.sqrt(), (xi1 - xi2).sqrt())))
}

/// Period in `tau` of the `v` oscillation.
pub fn period_v(ell_s: f64, h_s: f64, p: &PhysParams) -> Result<f64> {
    let class = classify(ell_s, h_s, p).region;
    if class == Region::Forbidden {
        return Err(Error::OutOfRegion("no motion is possible".into()));
    }
    let q = quartic_structure(ell_s, h_s, p);
    let (eta1, eta2) = (q.eta1(), q.eta2());
    let sf = p.f.sqrt();
    if eta2 > 0.0 {
        // v oscillates inside [v2, v1] without reaching zero.
        Ok(PI / (sf * agm(eta1.sqrt(), eta2.sqrt())))
    } else {
        Ok(2.0 * PI / (sf * agm((eta1 - eta2).sqrt(), (-eta2).sqrt())))
    }
}

/// Both periods; fails with `UnboundedU` outside the bounded branch.
pub fn periods(ell_s: f64, h_s: f64, p: &PhysParams) -> Result<(f64, f64)> {
    Ok((period_u(ell_s, h_s, p)?, period_v(ell_s, h_s, p)?))
}

/// The `u = const` brake orbits living on the II/IV boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrakeFamily {
    pub ell_s: f64,
    pub u_star: f64,
    pub xi_star: f64,
    pub hs_star: f64,
    pub eta1_star: f64,
    pub v1_star: f64,
}

pub fn brake_family(ell_s: f64, p: &PhysParams) -> Result<BrakeFamily> {
    if !(ell_s > -p.mu && ell_s < p.mu) {
        return Err(Error::OutOfRange {
            value: ell_s,
            lo: -p.mu,
            hi: p.mu,
        });
    }
    let s = p.mu + ell_s;
    let xi_star = (2.0 * s / p.f).sqrt();
    let hs_star = -(2.0 * p.f * s).sqrt();
    let eta1_star = quartic_structure(ell_s, hs_star, p).eta1();
    Ok(BrakeFamily {
        ell_s,
        u_star: xi_star.sqrt(),
        xi_star,
        hs_star,
        eta1_star,
        v1_star: eta1_star.sqrt(),
    })
}

/// Vector field `(u', p_u')` of the reduced one-degree-of-freedom
/// Hamiltonian `p_u^2/(2u^2) - (2(mu+ell) + f u^4)/(2u^2)`.
pub fn reduced_field(u: f64, pu: f64, ell_s: f64, p: &PhysParams) -> [f64; 2] {
    let u2 = u * u;
    let u3 = u2 * u;
    [pu / u2, pu * pu / u3 - 2.0 * (p.mu + ell_s) / u3 + p.f * u]
}

/// Jacobian of [`reduced_field`] with rows `(u', p_u')` and columns `(u, p_u)`.
pub fn reduced_jacobian(u: f64, pu: f64, ell_s: f64, p: &PhysParams) -> [[f64; 2]; 2] {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u2 * u2;
    [
        [-2.0 * pu / u3, 1.0 / u2],
        [-3.0 * pu * pu / u4 + 6.0 * (p.mu + ell_s) / u4 + p.f, 2.0 * pu / u3],
    ]
}

pub fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Energy at which `T_v / T_u = num / den` inside region IV.
///
/// `search` bounds the energy; by default the whole region IV ray below
/// `h_s*` down to `64 h_s*` is scanned.
pub fn commensurable_energy(
    ell_s: f64,
    num: u32,
    den: u32,
    search: Option<(f64, f64)>,
    p: &PhysParams,
) -> Result<f64> {
    if den == 0 || num >= den {
        return Err(Error::InvalidRatio { p: num, q: den });
    }
    let fam = brake_family(ell_s, p)?;
    let hs = fam.hs_star;
    let target = num as f64 / den as f64;
    let ratio = |h: f64| -> f64 {
        match periods(ell_s, h, p) {
            Ok((tu, tv)) => tv / tu - target,
            Err(_) => f64::NAN,
        }
    };
    let (lo, hi) = search.unwrap_or((64.0 * hs, hs * (1.0 + 1e-12)));
    let hi = hi.min(hs * (1.0 + 1e-15));
    if !(lo < hi) {
        return Err(Error::NotFound(format!("empty energy interval [{lo}, {hi}]")));
    }
    // Scan in log distance from h_s*, where the ratio varies most evenly.
    let (dlo, dhi) = ((hs - hi).ln(), (hs - lo).ln());
    let n = 400;
    let grid: Vec<f64> = (0..=n)
        .map(|k| hs - (dlo + (dhi - dlo) * k as f64 / n as f64).exp())
        .collect();
    let mut prev = (grid[0], ratio(grid[0]));
    for &h in &grid[1..] {
        let g = ratio(h);
        if prev.1.is_finite() && g.is_finite() && prev.1.signum() != g.signum() {
            let root = bisect(ratio, prev.0, h, 1e-15)
                .ok_or_else(|| Error::NotFound("bracket collapsed".into()))?;
            return Ok(root);
        }
        prev = (h, g);
    }
    Err(Error::NotFound(format!(
        "T_v/T_u never equals {num}/{den} on [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> PhysParams {
        PhysParams::default()
    }

    fn h_of(b: f64, pp: &PhysParams) -> f64 {
        b * pp.f.sqrt()
    }

    #[test]
    fn region_one_root_pattern() {
        let pp = p();
        let q = quartic_structure(-2.0 * pp.mu, -0.01, &pp);
        assert_eq!(q.v_kinds, [RootKind::Positive, RootKind::Imaginary]);
        assert_eq!(q.u_kinds, [RootKind::Positive, RootKind::Imaginary]);
        assert!(q.xi1() > 0.0);
    }

    #[test]
    fn double_root_on_the_brake_family() {
        let pp = p();
        let h = -(2.0 * pp.f * pp.mu).sqrt();
        let q = quartic_structure(0.0, h, &pp);
        assert_relative_eq!(q.xi1(), q.xi2(), max_relative = 1e-7);
        assert_eq!(q.u_kinds, [RootKind::Positive, RootKind::Positive]);
    }

    #[test]
    fn classify_examples() {
        let pp = p();
        let mu = pp.mu;
        let ell = 0.3 * mu;
        let edge = -(2.0 * (mu + ell)).sqrt();
        assert_eq!(classify(ell, h_of(edge - 10.0, &pp), &pp).region, Region::IV);
        assert_eq!(classify(ell, h_of(edge + 10.0, &pp), &pp).region, Region::II);
        assert_eq!(classify(ell, h_of(edge, &pp), &pp).region, Region::BoundaryTwoFour);
        assert_eq!(classify(mu, h_of(5.0, &pp), &pp).region, Region::BoundaryTwoThree);
        assert_eq!(classify(mu, -2.0 * (pp.f * mu).sqrt(), &pp).region, Region::PointTwoFour);
        assert_eq!(classify(2.0 * mu, -1e-3, &pp).region, Region::Forbidden);
        assert!(classify(ell, h_of(edge - 10.0, &pp), &pp).bounded_u_branch_exists);
    }

    #[test]
    fn zero_velocity_counts() {
        let pp = p();
        let fam = brake_family(348_600.0, &pp).unwrap();
        let iv = zero_velocity_points(348_600.0, 1.2 * fam.hs_star, &pp);
        assert_eq!(iv.len(), 4);
        assert_eq!(iv[0].0, iv[1].0);
        assert_eq!(iv[0].1, -iv[1].1);
        for &(x, y) in &iv {
            let r = x.hypot(y);
            let h = 1.2 * fam.hs_star;
            assert!((h + pp.mu / r + pp.f * x).abs() <= 1e-10 * (pp.mu / r).max(h.abs()));
        }
        assert!(zero_velocity_points(348_600.0, 0.5 * fam.hs_star, &pp).is_empty());
        assert_eq!(zero_velocity_points(-2.0 * pp.mu, -0.05, &pp).len(), 2);
    }

    #[test]
    fn brake_family_reference_values() {
        let fam = brake_family(348_600.0, &p()).unwrap();
        assert_relative_eq!(fam.hs_star, -0.116_743, max_relative = 1e-5);
        assert_relative_eq!(fam.xi_star, 1.280_08e7, max_relative = 1e-5);
        assert!(brake_family(p().mu, &p()).is_err());
        let near = brake_family(-p().mu * (1.0 - 1e-14), &p()).unwrap();
        assert!(near.u_star < 1e-1 * brake_family(0.0, &p()).unwrap().u_star);
    }

    #[test]
    fn saddle_determinant() {
        let pp = p();
        for &ell in &[-300_000.0, 0.0, 348_600.0] {
            let fam = brake_family(ell, &pp).unwrap();
            let field = reduced_field(fam.u_star, 0.0, ell, &pp);
            assert!(field[1].abs() <= 1e-12 * pp.f * fam.u_star);
            let j = reduced_jacobian(fam.u_star, 0.0, ell, &pp);
            assert_relative_eq!(det2(&j), -4.0 * pp.f / fam.xi_star, max_relative = 1e-12);
        }
    }

    #[test]
    fn period_examples() {
        let pp = p();
        let ell = 348_600.0;
        let fam = brake_family(ell, &pp).unwrap();
        let (tu, tv) = periods(ell, 1.05 * fam.hs_star, &pp).unwrap();
        assert!(tv < tu);
        assert!(matches!(periods(ell, 0.9 * fam.hs_star, &pp), Err(Error::UnboundedU)));
        assert!(period_v(ell, 0.9 * fam.hs_star, &pp).unwrap().is_finite());
    }

    #[test]
    fn commensurable_ratios() {
        let pp = p();
        let ell = 348_600.0;
        for (a, b) in [(1, 2), (1, 3)] {
            let h = commensurable_energy(ell, a, b, None, &pp).unwrap();
            let (tu, tv) = periods(ell, h, &pp).unwrap();
            assert!((tv / tu - a as f64 / b as f64).abs() <= 1e-10);
        }
        assert!(matches!(
            commensurable_energy(ell, 2, 1, None, &pp),
            Err(Error::InvalidRatio { .. })
        ));
    }
}
