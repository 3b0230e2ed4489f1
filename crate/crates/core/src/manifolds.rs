//! Stable and unstable manifolds of hyperbolic fixed points of a planar map,
//! grown from primary segments and corrected with the MFLI.

use std::io::{self, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::CubicSpline;
use crate::ssmap::{Mat2, SectionPoint, SunShadowMap};

pub type Point = [f64; 2];

/// A map of the plane that may lose points.
pub trait PlanarMap: Sync {
    /// Image of `q`, or `None` when the orbit is lost.
    fn image(&self, q: Point) -> Option<Point>;
    /// Image of `q` together with the Jacobian at `q`.
    fn image_jacobian(&self, q: Point) -> Option<(Point, Mat2)>;
    /// Fails when `q` is outside the map's domain of definition.
    fn check(&self, _q: Point) -> Result<()> {
        Ok(())
    }
    /// Lengths of one unit along each coordinate, used to measure distances.
    fn units(&self) -> Point {
        [1.0, 1.0]
    }
}

fn mul(m: &Mat2, w: Point) -> Point {
    [m[0][0] * w[0] + m[0][1] * w[1], m[1][0] * w[0] + m[1][1] * w[1]]
}

fn invert(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

fn norm(w: Point) -> f64 {
    w[0].hypot(w[1])
}

/// The Sun-shadow map at a fixed `ell_s`, forward or inverse.
#[derive(Debug, Clone, Copy)]
pub struct SectionMap {
    pub map: SunShadowMap,
    pub ell_s: f64,
    pub inverse: bool,
}

impl SectionMap {
    pub fn forward(map: SunShadowMap, ell_s: f64) -> Self {
        Self {
            map,
            ell_s,
            inverse: false,
        }
    }

    pub fn backward(map: SunShadowMap, ell_s: f64) -> Self {
        Self {
            map,
            ell_s,
            inverse: true,
        }
    }

    pub fn reversed(self) -> Self {
        Self {
            inverse: !self.inverse,
            ..self
        }
    }

    fn point(&self, q: Point) -> SectionPoint {
        SectionPoint::new(q[0], q[1], self.ell_s)
    }
}

impl PlanarMap for SectionMap {
    fn image(&self, q: Point) -> Option<Point> {
        let q = self.point(q);
        let out = if self.inverse {
            self.map.apply_inverse(&q)
        } else {
            self.map.apply(&q)
        };
        out.ok()?.point.map(|r| [r.u, r.pu])
    }

    fn image_jacobian(&self, q: Point) -> Option<(Point, Mat2)> {
        if self.inverse {
            // The inverse Jacobian at q is the inverse of the forward one at
            // the preimage.
            let pre = self.image(q)?;
            let (jac, _) = self.map.jacobian_variational(&self.point(pre)).ok()?;
            Some((pre, invert(&jac)))
        } else {
            let (jac, out) = self.map.jacobian_variational(&self.point(q)).ok()?;
            out.point.map(|r| ([r.u, r.pu], jac))
        }
    }

    fn check(&self, q: Point) -> Result<()> {
        match crate::ssmap::forbidden_class(&self.point(q), &self.map.params) {
            Some(reason) => Err(Error::ForbiddenPoint(reason)),
            None => Ok(()),
        }
    }

    fn units(&self) -> Point {
        [self.map.params.section_u_unit(), self.map.params.section_pu_unit()]
    }
}

/// Linear saddle `q -> c + A (q - c)` on a square box; points leaving the box
/// are lost. Its invariant manifolds are the eigenlines through `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSaddle {
    pub center: Point,
    pub matrix: Mat2,
    pub half_width: f64,
}

impl LinearSaddle {
    /// Saddle with eigenvalues `expand` along `unstable` and `contract`
    /// along `stable`.
    pub fn new(center: Point, expand: f64, contract: f64, unstable: Point, stable: Point, half_width: f64) -> Self {
        let p = [[unstable[0], stable[0]], [unstable[1], stable[1]]];
        let d = [[expand, 0.0], [0.0, contract]];
        let pinv = invert(&p);
        let pd = [
            [p[0][0] * d[0][0], p[0][1] * d[1][1]],
            [p[1][0] * d[0][0], p[1][1] * d[1][1]],
        ];
        let matrix = [
            [
                pd[0][0] * pinv[0][0] + pd[0][1] * pinv[1][0],
                pd[0][0] * pinv[0][1] + pd[0][1] * pinv[1][1],
            ],
            [
                pd[1][0] * pinv[0][0] + pd[1][1] * pinv[1][0],
                pd[1][0] * pinv[0][1] + pd[1][1] * pinv[1][1],
            ],
        ];
        Self {
            center,
            matrix,
            half_width,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: invert(&self.matrix),
            ..*self
        }
    }

    fn inside(&self, q: Point) -> bool {
        (q[0] - self.center[0]).abs() <= self.half_width && (q[1] - self.center[1]).abs() <= self.half_width
    }
}

impl PlanarMap for LinearSaddle {
    fn image(&self, q: Point) -> Option<Point> {
        let d = mul(&self.matrix, [q[0] - self.center[0], q[1] - self.center[1]]);
        let r = [self.center[0] + d[0], self.center[1] + d[1]];
        self.inside(r).then_some(r)
    }

    fn image_jacobian(&self, q: Point) -> Option<(Point, Mat2)> {
        self.image(q).map(|r| (r, self.matrix))
    }

    fn check(&self, q: Point) -> Result<()> {
        if self.inside(q) {
            Ok(())
        } else {
            Err(Error::LostOrbit)
        }
    }
}

/// Modified fast Lyapunov indicator of one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mfli {
    /// `max_n log |J_n w0|` over the iterates reached, `n = 0` included.
    pub value: f64,
    /// Iterates actually performed.
    pub iterations: usize,
    /// The orbit was lost before the horizon.
    pub truncated: bool,
}

/// MFLI of `q` with unit tangent `w0` over `horizon` iterates of `map`.
pub fn mfli<M: PlanarMap + ?Sized>(map: &M, q: Point, w0: Point, horizon: usize) -> Result<Mfli> {
    map.check(q)?;
    let mut w = [w0[0] / norm(w0), w0[1] / norm(w0)];
    let (mut log_len, mut best) = (0.0_f64, 0.0_f64);
    let mut cur = q;
    for n in 0..horizon {
        let Some((next, jac)) = map.image_jacobian(cur) else {
            return Ok(Mfli {
                value: best,
                iterations: n,
                truncated: true,
            });
        };
        let jw = mul(&jac, w);
        let len = norm(jw);
        log_len += len.ln();
        best = best.max(log_len);
        w = [jw[0] / len, jw[1] / len];
        cur = next;
    }
    Ok(Mfli {
        value: best,
        iterations: horizon,
        truncated: false,
    })
}

/// One generation of a branch: polylines in `(u, p_u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primary {
    pub generation: usize,
    pub components: Vec<Vec<Point>>,
}

impl Primary {
    pub fn len(&self) -> usize {
        self.components.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.components.iter().flatten().copied()
    }
}

/// Largest primary size the doubling law can resolve in double precision.
pub const MAX_PRIMARY_POINTS: usize = 52;

/// Largest relative defect of the first image from the linearization.
pub const LINEAR_TOL: f64 = 1e-3;

/// Offset reductions tried when the initial primary is not linear enough.
const OFFSET_RETRIES: usize = 6;

/// Primary size for which the first spacing of the doubling law matches the
/// initial offset.
pub fn auto_primary_size(lambda: f64) -> usize {
    ((2.0 * lambda).log2().round() as usize).clamp(3, MAX_PRIMARY_POINTS)
}

/// Doubling-law spacing `a` that makes an `n`-point primary starting at
/// `offset` from the fixed point end at `lambda * offset`.
pub fn spacing_for_offset(offset: f64, lambda: f64, n: usize) -> f64 {
    offset * (lambda - 1.0) / (2f64.powi(n as i32) - 2.0)
}

/// Initial primary along the unit direction `eigvec` expanded by `lambda`
/// under `map`: `v_i = v_{i-1} + a 2^i eigvec`, with the first offset set so
/// that the last point is the image of the first.
pub fn init_primary<M: PlanarMap + ?Sized>(
    map: &M,
    fp: Point,
    eigvec: Point,
    lambda: f64,
    a: f64,
    n: usize,
) -> Result<Primary> {
    if !(3..=MAX_PRIMARY_POINTS).contains(&n) {
        return Err(Error::PrimaryTooLong {
            n,
            max: MAX_PRIMARY_POINTS,
        });
    }
    if !(lambda > 1.0) || !(a > 0.0) {
        return Err(Error::InvalidParams("primary needs lambda > 1 and a > 0".into()));
    }
    let psi = [eigvec[0] / norm(eigvec), eigvec[1] / norm(eigvec)];
    let d0 = a * (2f64.powi(n as i32) - 2.0) / (lambda - 1.0);
    let at = |d: f64| [fp[0] + d * psi[0], fp[1] + d * psi[1]];
    let mut points: Vec<Point> = (0..n)
        .map(|i| at(d0 + a * (2f64.powi(i as i32 + 1) - 2.0)))
        .collect();
    let first = points[0];
    let image = map.image(first).ok_or(Error::LostOrbit)?;
    let linear = at(lambda * d0);
    // Measured against the image displacement: map round-off near the fixed
    // point keeps a defect relative to the offset itself above 1e-3.
    let defect = norm([image[0] - linear[0], image[1] - linear[1]]) / (lambda * d0);
    if defect > LINEAR_TOL {
        return Err(Error::LinearRegimeViolated(defect));
    }
    points[n - 1] = image;
    Ok(Primary {
        generation: 0,
        components: vec![points],
    })
}

/// MFLI-based correction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    /// Candidates on each transverse segment (odd keeps the point itself).
    pub samples: usize,
    /// Map iterates per MFLI evaluation.
    pub horizon: usize,
    /// Transverse half-width in section units; `None` uses half the local
    /// spacing.
    pub half_width: Option<f64>,
}

impl Default for Correction {
    fn default() -> Self {
        Self {
            samples: 21,
            horizon: 8,
            half_width: None,
        }
    }
}

fn scaled(q: Point, units: Point) -> Point {
    [q[0] / units[0], q[1] / units[1]]
}

fn unscaled(q: Point, units: Point) -> Point {
    [q[0] * units[0], q[1] * units[1]]
}

/// Moves every point across the curve to the largest MFLI found on its
/// transverse segment: the centre of the run of candidates tied at the top.
/// `mfli_map` should be the map under which the branch contracts.
pub fn correct_primary<M: PlanarMap + ?Sized>(mfli_map: &M, v: &Primary, corr: &Correction) -> Result<Primary> {
    let units = mfli_map.units();
    let mut offset = 0;
    let mut components = Vec::with_capacity(v.components.len());
    for comp in &v.components {
        if comp.len() < 2 {
            components.push(comp.clone());
            offset += comp.len();
            continue;
        }
        let s: Vec<Point> = comp.iter().map(|&q| scaled(q, units)).collect();
        let correct_one = |i: usize| -> Result<Point> {
            let prev = s[i.saturating_sub(1)];
            let next = s[(i + 1).min(s.len() - 1)];
            let t = [next[0] - prev[0], next[1] - prev[1]];
            let tn = norm(t);
            if tn == 0.0 {
                return Ok(comp[i]);
            }
            let normal = [-t[1] / tn, t[0] / tn];
            let spacing = {
                let mut gaps = Vec::with_capacity(2);
                if i > 0 {
                    gaps.push(norm([s[i][0] - s[i - 1][0], s[i][1] - s[i - 1][1]]));
                }
                if i + 1 < s.len() {
                    gaps.push(norm([s[i + 1][0] - s[i][0], s[i + 1][1] - s[i][1]]));
                }
                gaps.iter().sum::<f64>() / gaps.len() as f64
            };
            let hw = corr.half_width.unwrap_or(spacing / 2.0);
            let w0 = unscaled(normal, units);
            let m = corr.samples.max(1);
            let offsets: Vec<f64> = (0..m)
                .map(|k| if m == 1 { 0.0 } else { -hw + 2.0 * hw * k as f64 / (m - 1) as f64 })
                .collect();
            let at = |d: f64| unscaled([s[i][0] + d * normal[0], s[i][1] + d * normal[1]], units);
            let values: Vec<Option<f64>> = offsets
                .iter()
                .map(|&d| mfli(mfli_map, at(d), w0, corr.horizon).ok().map(|v| v.value))
                .collect();
            let top = values
                .iter()
                .flatten()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return Err(Error::AllCandidatesLost(offset + i));
            }
            // Candidates tied at the top form a plateau around the manifold;
            // its centre is within half a sample spacing of the crossing.
            let tol = 1e-9 * top.abs().max(1.0);
            let on_top = |k: usize| values[k].is_some_and(|v| v >= top - tol);
            let peak = (0..m)
                .filter(|&k| on_top(k))
                .min_by(|&a, &b| offsets[a].abs().total_cmp(&offsets[b].abs()))
                .unwrap_or(0);
            let lo = (0..=peak).rev().take_while(|&k| on_top(k)).last().unwrap_or(peak);
            let hi = (peak..m).take_while(|&k| on_top(k)).last().unwrap_or(peak);
            Ok(at(0.5 * (offsets[lo] + offsets[hi])))
        };
        #[cfg(feature = "parallel")]
        let fixed: Result<Vec<Point>> = (0..comp.len()).into_par_iter().map(correct_one).collect();
        #[cfg(not(feature = "parallel"))]
        let fixed: Result<Vec<Point>> = (0..comp.len()).map(correct_one).collect();
        components.push(fixed?);
        offset += comp.len();
    }
    Ok(Primary {
        generation: v.generation,
        components,
    })
}

/// Which invariant manifold a branch follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldOptions {
    /// Distance of the first primary point from the fixed point, in section
    /// units; `None` uses `1e-6` of the fixed point's norm. It is reduced
    /// tenfold while the first image is not linear enough.
    pub offset: Option<f64>,
    /// Points of the initial primary; `None` picks the doubling-law size.
    pub primary_points: Option<usize>,
    /// Generations grown after the initial primary.
    pub generations: usize,
    /// Chord spacing bound as a fraction of the generation's bounding-box
    /// diagonal.
    pub spacing: f64,
    /// Cap on the points of one generation; refinement stops when reached.
    pub max_points: usize,
    /// MFLI correction applied to every new generation; `None` skips it.
    pub correction: Option<Correction>,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            offset: None,
            primary_points: None,
            generations: 6,
            spacing: 1e-3,
            max_points: 20_000,
            correction: Some(Correction::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub fixed_point: Point,
    pub kind: ManifoldKind,
    /// `+1` or `-1`: which half of the eigenline.
    pub direction: i8,
    pub eigvec: Point,
    /// Expansion factor of the growth map along `eigvec`.
    pub lambda: f64,
    /// `V_0, V_1, ...`; the branch is their union.
    pub primaries: Vec<Primary>,
    /// Generations whose refinement stopped at `max_points`.
    pub capped: Vec<usize>,
}

/// Parent samples of one component with the images of those that survive.
struct Refined {
    parents: Vec<Point>,
    images: Vec<Option<Point>>,
}

fn chord_params(comp: &[Point], units: Point) -> Vec<f64> {
    let mut acc = 0.0;
    let mut theta = vec![0.0];
    for w in comp.windows(2) {
        let a = scaled(w[0], units);
        let b = scaled(w[1], units);
        acc += norm([b[0] - a[0], b[1] - a[1]]);
        theta.push(acc);
    }
    theta
}

fn map_all<M: PlanarMap + ?Sized>(map: &M, pts: &[Point]) -> Vec<Option<Point>> {
    #[cfg(feature = "parallel")]
    return pts.par_iter().map(|&q| map.image(q)).collect();
    #[cfg(not(feature = "parallel"))]
    return pts.iter().map(|&q| map.image(q)).collect();
}

fn bbox_diagonal<'a>(pts: impl Iterator<Item = &'a Point>, units: Point) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in pts {
        let s = scaled(*q, units);
        for k in 0..2 {
            lo[k] = lo[k].min(s[k]);
            hi[k] = hi[k].max(s[k]);
        }
    }
    norm([hi[0] - lo[0], hi[1] - lo[1]])
}

/// Densifies one parent component on its chord-length spline until the
/// images of consecutive surviving parents are at most `bound` apart.
fn refine_component<M: PlanarMap + ?Sized>(map: &M, comp: &[Point], bound: f64, budget: &mut usize) -> Result<Refined> {
    let units = map.units();
    let mut theta = chord_params(comp, units);
    let mut parents = comp.to_vec();
    let mut images = map_all(map, comp);
    if comp.len() < 2 {
        return Ok(Refined { parents, images });
    }
    // Duplicate parents would break the spline knots.
    theta.dedup_by(|b, a| *b <= *a);
    if theta.len() != comp.len() {
        return Ok(Refined { parents, images });
    }
    let su = CubicSpline::natural(&theta, &comp.iter().map(|q| q[0]).collect::<Vec<_>>())?;
    let sp = CubicSpline::natural(&theta, &comp.iter().map(|q| q[1]).collect::<Vec<_>>())?;
    let too_far = |a: &Option<Point>, b: &Option<Point>| match (a, b) {
        (Some(a), Some(b)) => norm([(b[0] - a[0]) / units[0], (b[1] - a[1]) / units[1]]) > bound,
        _ => false,
    };
    loop {
        let gaps: Vec<usize> = (0..parents.len() - 1)
            .filter(|&i| too_far(&images[i], &images[i + 1]) && theta[i + 1] - theta[i] > 1e-13 * theta[i + 1].abs().max(1.0))
            .collect();
        if gaps.is_empty() || *budget == 0 {
            break;
        }
        let gaps = &gaps[..gaps.len().min(*budget)];
        *budget -= gaps.len();
        let mids: Vec<f64> = gaps.iter().map(|&i| 0.5 * (theta[i] + theta[i + 1])).collect();
        let new_parents: Vec<Point> = mids.iter().map(|&t| [su.eval(t), sp.eval(t)]).collect();
        let new_images = map_all(map, &new_parents);
        for (k, &i) in gaps.iter().enumerate().rev() {
            theta.insert(i + 1, mids[k]);
            parents.insert(i + 1, new_parents[k]);
            images.insert(i + 1, new_images[k]);
        }
    }
    Ok(Refined { parents, images })
}

/// Splits the images of refined parents at lost samples.
fn split_components(refined: &[Refined]) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    for r in refined {
        let mut cur = Vec::new();
        for img in &r.images {
            match img {
                Some(q) => cur.push(*q),
                None => {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                }
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Grows one branch of the invariant manifold of `fp` along
/// `direction * eigvec`. `growth` expands along the branch by `lambda`;
/// `contracting` is its inverse, used for the MFLI correction.
#[allow(clippy::too_many_arguments)]
pub fn grow_branch<G: PlanarMap + ?Sized, C: PlanarMap + ?Sized>(
    growth: &G,
    contracting: &C,
    kind: ManifoldKind,
    fp: Point,
    eigvec: Point,
    direction: i8,
    lambda: f64,
    opts: &ManifoldOptions,
) -> Result<Branch> {
    let units = growth.units();
    let dir = [direction as f64 * eigvec[0], direction as f64 * eigvec[1]];
    let psi_units = norm(scaled([dir[0] / norm(dir), dir[1] / norm(dir)], units));
    let offset = opts.offset.unwrap_or(1e-6 * norm(scaled(fp, units)));
    // Offset along the raw unit direction that spans `offset` section units.
    let raw_offset = offset / psi_units;
    let n = opts.primary_points.unwrap_or_else(|| auto_primary_size(lambda));
    let mut attempt = 0;
    let mut current = loop {
        let a = spacing_for_offset(raw_offset / 10f64.powi(attempt), lambda, n);
        match init_primary(growth, fp, dir, lambda, a, n) {
            Err(Error::LinearRegimeViolated(_)) if (attempt as usize) < OFFSET_RETRIES => attempt += 1,
            other => break other?,
        }
    };
    if let Some(corr) = &opts.correction {
        current = correct_primary(contracting, &current, corr)?;
    }
    let mut primaries = Vec::with_capacity(opts.generations + 1);
    let mut capped = Vec::new();
    for gen in 1..=opts.generations {
        // Refinement bound from the coarse images of this generation.
        let coarse: Vec<Point> = map_all(growth, &current.points().collect::<Vec<_>>()).into_iter().flatten().collect();
        if coarse.is_empty() {
            return Err(Error::BranchExtinct(gen));
        }
        let bound = opts.spacing * bbox_diagonal(coarse.iter(), units).max(f64::MIN_POSITIVE);
        let mut budget = opts.max_points.saturating_sub(current.len());
        let refined = current
            .components
            .iter()
            .map(|comp| refine_component(growth, comp, bound, &mut budget))
            .collect::<Result<Vec<_>>>()?;
        if budget == 0 {
            capped.push(gen);
        }
        let next_components = split_components(&refined);
        // The stored parent generation is the refined one, so that each of
        // its surviving points has its image among the next vertices.
        current.components = refined.into_iter().map(|r| r.parents).collect();
        primaries.push(current);
        let mut next = Primary {
            generation: gen,
            components: next_components,
        };
        if next.is_empty() {
            return Err(Error::BranchExtinct(gen));
        }
        if let Some(corr) = &opts.correction {
            next = correct_primary(contracting, &next, corr)?;
        }
        current = next;
    }
    primaries.push(current);
    Ok(Branch {
        fixed_point: fp,
        kind,
        direction,
        eigvec,
        lambda,
        primaries,
        capped,
    })
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

/// Distance in section units from `q` to the polylines of `v`.
pub fn distance_to_primary(q: Point, v: &Primary, units: Point) -> f64 {
    let s = scaled(q, units);
    v.components
        .iter()
        .flat_map(|c| {
            let pts: Vec<Point> = c.iter().map(|&p| scaled(p, units)).collect();
            if pts.len() == 1 {
                vec![norm([s[0] - pts[0][0], s[1] - pts[0][1]])]
            } else {
                pts.windows(2).map(|w| segment_distance(s, w[0], w[1])).collect()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Self-consistency of consecutive generations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    /// Largest distance, in section units, from the image of a point of
    /// `V_i` to the polylines of `V_{i+1}`.
    pub max_distance: f64,
    /// Points whose image was checked.
    pub checked: usize,
    /// Points whose image was lost.
    pub lost: usize,
}

/// Maps every point of every generation but the last and measures its
/// distance to the next generation.
pub fn branch_consistency<M: PlanarMap + ?Sized>(growth: &M, branch: &Branch) -> Consistency {
    let units = growth.units();
    let mut out = Consistency {
        max_distance: 0.0,
        checked: 0,
        lost: 0,
    };
    for pair in branch.primaries.windows(2) {
        let pts: Vec<Point> = pair[0].points().collect();
        for img in map_all(growth, &pts) {
            match img {
                Some(r) => {
                    out.max_distance = out.max_distance.max(distance_to_primary(r, &pair[1], units));
                    out.checked += 1;
                }
                None => out.lost += 1,
            }
        }
    }
    out
}

/// Writes `gen,comp,idx,u,pu`.
pub fn write_branch_csv<W: Write>(branch: &Branch, mut out: W) -> io::Result<()> {
    writeln!(out, "gen,comp,idx,u,pu")?;
    for v in &branch.primaries {
        for (c, comp) in v.components.iter().enumerate() {
            for (i, q) in comp.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", v.generation, c, i, q[0], q[1])?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saddle() -> LinearSaddle {
        LinearSaddle::new([1.0, 2.0], 4.0, 0.3, [1.0, 0.5], [-0.2, 1.0], 50.0)
    }

    #[test]
    fn saddle_has_the_requested_eigenpairs() {
        let s = saddle();
        let img = s.image([2.0, 2.5]).unwrap();
        assert!((img[0] - 5.0).abs() < 1e-12 && (img[1] - 4.0).abs() < 1e-12);
        let img = s.image([0.8, 3.0]).unwrap();
        assert!((img[0] - 0.94).abs() < 1e-12 && (img[1] - 2.3).abs() < 1e-12);
        assert!(s.image([40.0, 2.0]).is_none());
    }

    #[test]
    fn primary_follows_the_doubling_law() {
        let s = saddle();
        let dir = [1.0 / 1.25f64.sqrt(), 0.5 / 1.25f64.sqrt()];
        let v = init_primary(&s, s.center, dir, 4.0, 1e-3, 3).unwrap();
        let d: Vec<f64> = v.components[0]
            .iter()
            .map(|q| norm([q[0] - s.center[0], q[1] - s.center[1]]))
            .collect();
        // d0 = a (2^3 - 2) / 3 = 2a, then steps 2a and 4a.
        assert!((d[0] - 2e-3).abs() < 1e-15 && (d[1] - 4e-3).abs() < 1e-15 && (d[2] - 8e-3).abs() < 1e-14);
        assert!(matches!(
            init_primary(&s, s.center, dir, 4.0, 1e-3, 60),
            Err(Error::PrimaryTooLong { .. })
        ));
    }

    #[test]
    fn mfli_grows_linearly_along_the_expanding_direction() {
        let s = saddle();
        let m = mfli(&s, s.center, [1.0, 0.5], 6).unwrap();
        assert!((m.value - 6.0 * 4f64.ln()).abs() < 1e-12 && !m.truncated);
        let m = mfli(&s, s.center, [-0.2, 1.0], 6).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn branch_csv_header() {
        let branch = Branch {
            fixed_point: [0.0, 0.0],
            kind: ManifoldKind::Unstable,
            direction: 1,
            eigvec: [1.0, 0.0],
            lambda: 2.0,
            primaries: vec![Primary {
                generation: 0,
                components: vec![vec![[1.0, 2.0], [3.0, 4.0]]],
            }],
            capped: vec![],
        };
        let mut buf = Vec::new();
        write_branch_csv(&branch, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gen,comp,idx,u,pu\n0,0,0,1,2\n0,0,1,3,4\n");
    }
}
