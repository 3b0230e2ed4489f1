//! Elliptic integrals and small root-finding helpers.

use std::f64::consts::FRAC_PI_2;

/// Arithmetic-geometric mean of two non-negative numbers.
pub fn agm(a: f64, b: f64) -> f64 {
    if a < 0.0 || b < 0.0 || a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let (mut a, mut b) = (a, b);
    for _ in 0..64 {
        let m = 0.5 * (a + b);
        let g = (a * b).sqrt();
        if (m - g).abs() <= 2.0 * f64::EPSILON * m {
            return 0.5 * (m + g);
        }
        a = m;
        b = g;
    }
    0.5 * (a + b)
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
///
/// At most one argument may be zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0 && z >= 0.0);
    let (mut x, mut y, mut z) = (x, y, z);
    let mut a = (x + y + z) / 3.0;
    let q = (3.0 * f64::EPSILON).powf(-1.0 / 6.0) * (a - x).abs().max((a - y).abs()).max((a - z).abs());
    let mut scale = 1.0;
    for _ in 0..64 {
        if q * scale < a.abs() {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        a = 0.25 * (a + lam);
        scale *= 0.25;
    }
    let dx = (a - x) / a;
    let dy = (a - y) / a;
    let dz = -(dx + dy);
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt()
}

/// Incomplete elliptic integral of the first kind `F(phi | m)` for
/// `|phi| <= pi/2` and `m sin^2(phi) <= 1`.
pub fn ellip_f(phi: f64, m: f64) -> f64 {
    if phi == 0.0 {
        return 0.0;
    }
    let s = phi.sin();
    let c = phi.cos();
    let c2 = if phi.abs() >= FRAC_PI_2 { 0.0 } else { c * c };
    s * carlson_rf(c2, 1.0 - m * s * s, 1.0)
}

/// Complete elliptic integral of the first kind via the AGM.
pub fn ellip_k(m: f64) -> f64 {
    if m >= 1.0 {
        return f64::INFINITY;
    }
    FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt())
}

/// Roots of `z^2 - 2 b z + c = 0` written as `b +- sqrt(b^2 - c)`.
///
/// Returns `(first, second, disc)` where `first` carries the `+` sign. The
/// real pair is computed without cancellation; a negative discriminant
/// yields `NaN` roots and is left for the caller to handle.
pub fn stable_quadratic(b: f64, c: f64) -> (f64, f64, f64) {
    let disc = b * b - c;
    if disc < 0.0 {
        return (f64::NAN, f64::NAN, disc);
    }
    let sq = disc.sqrt();
    if b >= 0.0 {
        let big = b + sq;
        let small = if big == 0.0 { 0.0 } else { c / big };
        (big, small, disc)
    } else {
        let big_neg = b - sq;
        let other = if big_neg == 0.0 { 0.0 } else { c / big_neg };
        (other, big_neg, disc)
    }
}

/// Evaluates a polynomial with coefficients in ascending order.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = coeffs.len();
    while n > 1 && coeffs[n - 1].abs() <= 1e-300 * scale.max(1e-300) {
        n -= 1;
    }
    &coeffs[..n]
}

/// Real roots of a polynomial (ascending coefficients) inside `[lo, hi]`.
///
/// Uses the critical points of the derivative to split the interval into
/// monotone pieces and bisects each sign change. Roots of even multiplicity
/// are reported when the polynomial touches zero within round-off of a
/// critical point.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trim(coeffs);
    if c.len() <= 1 {
        return Vec::new();
    }
    if c.len() == 2 {
        let r = -c[0] / c[1];
        return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
    }
    let crit = real_roots_in(&poly_derivative(c), lo, hi);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.iter().copied().filter(|&x| x > lo && x < hi));
    knots.push(hi);
    let mag = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x.abs() + k.abs());
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (poly_eval(c, a), poly_eval(c, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect_poly(c, a, b, fa));
        }
    }
    if poly_eval(c, hi) == 0.0 {
        roots.push(hi);
    }
    // Touching roots at critical points.
    for &x in &crit {
        if x > lo && x < hi && poly_eval(c, x).abs() <= 64.0 * f64::EPSILON * mag(x) {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
    roots
}

fn bisect_poly(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = poly_eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Cauchy bound on the magnitude of the roots.
pub fn root_bound(coeffs: &[f64]) -> f64 {
    let c = trim(coeffs);
    let lead = c[c.len() - 1].abs();
    1.0 + c[..c.len() - 1].iter().fold(0.0f64, |m, k| m.max(k.abs() / lead))
}

/// Bisection on a bracketing interval; `f(a)` and `f(b)` must differ in sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * m.abs().max(f64::MIN_POSITIVE) || m <= a.min(b) || m >= a.max(b) {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn agm_known_values() {
        assert_eq!(agm(3.0, 3.0), 3.0);
        // Gauss's constant: 1 / agm(1, sqrt 2).
        assert_relative_eq!(1.0 / agm(1.0, 2f64.sqrt()), 0.834_626_841_674_073_2, max_relative = 1e-15);
        assert_eq!(agm(0.0, 1.0), 0.0);
    }

    #[test]
    fn rf_special_values() {
        // R_F(0, 1, 2) = 1.3110287771461 (lemniscate-related constant).
        assert_relative_eq!(carlson_rf(0.0, 1.0, 2.0), 1.311_028_777_146_059_9, max_relative = 1e-14);
        assert_relative_eq!(carlson_rf(1.0, 1.0, 1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(carlson_rf(0.0, 1.0, 1.0), PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn complete_limit_matches_agm() {
        for &m in &[0.0, 0.1, 0.5, 0.9, 0.999_999] {
            assert_relative_eq!(ellip_f(PI / 2.0, m), ellip_k(m), max_relative = 1e-14);
        }
    }

    fn simpson_f(phi: f64, m: f64) -> f64 {
        let n = 20_000;
        let h = phi / n as f64;
        let g = |t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt();
        let mut s = g(0.0) + g(phi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(k as f64 * h);
        }
        s * h / 3.0
    }

    proptest! {
        #[test]
        fn ellip_f_matches_quadrature(phi in 0.0f64..1.5, m in 0.0f64..0.95) {
            let a = ellip_f(phi, m);
            let b = simpson_f(phi, m);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-12));
        }

        #[test]
        fn quadratic_roots_satisfy_equation(b in -1e8f64..1e8, c in -1e15f64..1e15) {
            let (r1, r2, d) = stable_quadratic(b, c);
            if d >= 0.0 {
                for r in [r1, r2] {
                    let res = r * r - 2.0 * b * r + c;
                    let scale = r * r + 2.0 * (b * r).abs() + c.abs();
                    prop_assert!(res.abs() <= 1e-12 * scale);
                }
                prop_assert!(r1 >= r2 - 1e-9 * r1.abs());
            }
        }
    }

    #[test]
    fn polynomial_roots() {
        // (x-1)(x-2)(x+3)(x-5) = x^4 - 5x^3 - 7x^2 + 41x - 30
        let c = [-30.0, 41.0, -7.0, -5.0, 1.0];
        let b = root_bound(&c);
        let r = real_roots_in(&c, -b, b);
        assert_eq!(r.len(), 4);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0, 5.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-13);
        }
        // Double root at 2: (x-2)^2 (x+1).
        let c = [4.0, 0.0, -3.0, 1.0];
        let r = real_roots_in(&c, -10.0, 10.0);
        assert!(r.iter().any(|x| (x - 2.0).abs() < 1e-6));
        assert!(r.iter().any(|x| (x + 1.0).abs() < 1e-12));
        // No real roots.
        assert!(real_roots_in(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
    }

    #[test]
    fn bisect_finds_cube_root() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), max_relative = 1e-14);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
