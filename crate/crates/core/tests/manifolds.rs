use sunshadow::brake::solve_brake;
use sunshadow::manifolds::{
    auto_primary_size, branch_consistency, correct_primary, distance_to_primary, grow_branch, init_primary, mfli,
    spacing_for_offset, write_branch_csv, Correction, LinearSaddle, ManifoldKind, ManifoldOptions, PlanarMap, Point,
    Primary, SectionMap,
};
use sunshadow::params::REFERENCE_ELL;
use sunshadow::ssmap::{find_fixed_point, FixedPoint, SectionPoint, SunShadowMap};
use sunshadow::PhysParams;

fn reference() -> (SectionMap, FixedPoint) {
    let p = PhysParams::default();
    let map = SunShadowMap::new(p);
    let (u, pu) = solve_brake(REFERENCE_ELL, &p).unwrap().fixed_point_seeds()[0];
    let fp = find_fixed_point(&map, &SectionPoint::new(u, pu, REFERENCE_ELL)).unwrap();
    (SectionMap::forward(map, REFERENCE_ELL), fp)
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn unit(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Distance from `q` to the line through `c` along `dir`.
fn line_distance(q: Point, c: Point, dir: Point) -> f64 {
    let d = unit(dir);
    ((q[0] - c[0]) * d[1] - (q[1] - c[1]) * d[0]).abs()
}

#[test]
fn correction_recovers_the_synthetic_unstable_line() {
    let (unstable, stable) = ([1.0, 0.5], [-0.3, 1.0]);
    let saddle = LinearSaddle::new([0.0, 0.0], 3.0, 1.0 / 3.0, unstable, stable, 50.0);
    let n = unit(unstable);
    let normal = [-n[1], n[0]];
    let hw = 0.1;
    let samples = 21;
    let spacing = 2.0 * hw / (samples - 1) as f64;
    // A polyline parallel to the line, shifted off it by different amounts.
    for shift in [0.0, 0.013, -0.047, 0.0815, -0.0999] {
        let comp: Vec<Point> = (0..12)
            .map(|i| {
                let t = 1.0 + 0.5 * i as f64;
                [t * n[0] + shift * normal[0], t * n[1] + shift * normal[1]]
            })
            .collect();
        let v = Primary {
            generation: 0,
            components: vec![comp],
        };
        let corr = Correction {
            samples,
            horizon: 8,
            half_width: Some(hw),
        };
        let fixed = correct_primary(&saddle.inverse(), &v, &corr).unwrap();
        for q in fixed.points() {
            let d = line_distance(q, [0.0, 0.0], unstable);
            assert!(d <= spacing / 2.0, "shift {shift}: {d} > {}", spacing / 2.0);
        }
    }
}

#[test]
fn correcting_an_exact_line_moves_points_less_than_the_sample_spacing() {
    let saddle = LinearSaddle::new([2.0, -1.0], 5.0, 0.25, [0.2, 1.0], [1.0, 0.1], 80.0);
    let n = unit([0.2, 1.0]);
    let comp: Vec<Point> = (0..10).map(|i| [2.0 + i as f64 * n[0], -1.0 + i as f64 * n[1]]).collect();
    let v = Primary {
        generation: 0,
        components: vec![comp.clone()],
    };
    let corr = Correction {
        samples: 11,
        horizon: 6,
        half_width: Some(0.05),
    };
    let fixed = correct_primary(&saddle.inverse(), &v, &corr).unwrap();
    for (a, b) in comp.iter().zip(fixed.points()) {
        assert!(dist(*a, b) <= 0.01 + 1e-15);
    }
}

#[test]
fn synthetic_branch_stays_on_the_eigenline() {
    let (unstable, stable) = ([1.0, -0.4], [0.5, 1.0]);
    let saddle = LinearSaddle::new([1.0, 1.0], 4.0, 0.2, unstable, stable, 100.0);
    let opts = ManifoldOptions {
        offset: Some(1e-3),
        generations: 3,
        spacing: 1e-2,
        correction: None,
        ..Default::default()
    };
    let b = grow_branch(&saddle, &saddle.inverse(), ManifoldKind::Unstable, [1.0, 1.0], unstable, 1, 4.0, &opts).unwrap();
    assert_eq!(b.primaries.len(), 4);
    for v in &b.primaries {
        for q in v.points() {
            assert!(line_distance(q, [1.0, 1.0], unstable) <= 1e-12);
        }
    }
    // Each generation starts where the previous one ended.
    for pair in b.primaries.windows(2) {
        let last = *pair[0].components[0].last().unwrap();
        let first = pair[1].components[0][0];
        assert!(dist(saddle.image(pair[0].components[0][0]).unwrap(), first) <= 1e-12);
        assert!(dist(last, first) <= 1e-12 * last[0].abs().max(1.0));
    }
    assert_eq!(branch_consistency(&saddle, &b).max_distance, 0.0);
}

#[test]
fn synthetic_branch_is_lost_outside_the_box() {
    let saddle = LinearSaddle::new([0.0, 0.0], 10.0, 0.1, [1.0, 0.0], [0.0, 1.0], 1.0);
    let opts = ManifoldOptions {
        offset: Some(1e-3),
        generations: 6,
        correction: None,
        ..Default::default()
    };
    let err = grow_branch(&saddle, &saddle.inverse(), ManifoldKind::Unstable, [0.0, 0.0], [1.0, 0.0], 1, 10.0, &opts);
    assert!(err.is_err());
}

#[test]
fn initial_primary_spans_one_map_image() {
    let (fwd, fp) = reference();
    let c = [fp.point.u, fp.point.pu];
    let lambda = fp.eigen.values[1];
    let n = auto_primary_size(lambda);
    let a = spacing_for_offset(1e-4, lambda, n);
    let v = init_primary(&fwd, c, fp.eigen.vectors[1], lambda, a, n).unwrap();
    let pts = &v.components[0];
    assert_eq!(pts.len(), n);
    let ratio = dist(pts[n - 1], c) / dist(pts[0], c);
    assert!((ratio / lambda - 1.0).abs() <= 1e-3, "ratio {ratio}");
    let image = fwd.image(pts[0]).unwrap();
    assert_eq!(image, pts[n - 1]);
    // Spacing doubles along the law.
    let gaps: Vec<f64> = pts[..n - 1].windows(2).map(|w| dist(w[0], w[1])).collect();
    for g in gaps.windows(2) {
        assert!((g[1] / g[0] - 2.0).abs() <= 1e-6);
    }
}

#[test]
fn mfli_at_the_fixed_point() {
    let (fwd, fp) = reference();
    let c = [fp.point.u, fp.point.pu];
    let grow = mfli(&fwd, c, fp.eigen.vectors[1], 3).unwrap();
    assert!(!grow.truncated);
    assert!((grow.value / (3.0 * fp.eigen.values[1].ln()) - 1.0).abs() <= 1e-3);
    let flat = mfli(&fwd, c, fp.eigen.vectors[0], 2).unwrap();
    assert_eq!(flat.value, 0.0);
}

#[test]
fn correction_does_not_lower_the_mfli_on_the_reference_primary() {
    let (fwd, fp) = reference();
    let bwd = fwd.reversed();
    let c = [fp.point.u, fp.point.pu];
    let lambda = fp.eigen.values[1];
    let n = 8;
    let v = init_primary(&fwd, c, fp.eigen.vectors[1], lambda, spacing_for_offset(1e-4, lambda, n), n).unwrap();
    let corr = Correction {
        samples: 5,
        horizon: 2,
        half_width: None,
    };
    let fixed = correct_primary(&bwd, &v, &corr).unwrap();
    let comp = &v.components[0];
    for (i, (a, b)) in comp.iter().zip(fixed.points()).enumerate() {
        let prev = comp[i.saturating_sub(1)];
        let next = comp[(i + 1).min(comp.len() - 1)];
        let t = unit([next[0] - prev[0], next[1] - prev[1]]);
        let w = [-t[1], t[0]];
        let before = mfli(&bwd, *a, w, 2).unwrap().value;
        let after = mfli(&bwd, b, w, 2).unwrap().value;
        assert!(after >= before - 1e-9 * before.abs(), "point {i}: {after} < {before}");
    }
}

#[test]
fn unstable_branch_is_self_consistent_and_splits() {
    let (fwd, fp) = reference();
    let opts = ManifoldOptions {
        generations: 4,
        correction: None,
        ..Default::default()
    };
    let branch = grow_branch(
        &fwd,
        &fwd.reversed(),
        ManifoldKind::Unstable,
        [fp.point.u, fp.point.pu],
        fp.eigen.vectors[1],
        -1,
        fp.eigen.values[1],
        &opts,
    )
    .unwrap();
    assert_eq!(branch.primaries.len(), 5);
    let check = branch_consistency(&fwd, &branch);
    assert!(check.max_distance <= 1e-4, "{check:?}");
    assert!(check.checked > 1000);
    let split = branch.primaries[2..]
        .iter()
        .any(|v| v.components.iter().filter(|c| c.len() >= 2).count() >= 2);
    assert!(split);
    // The chain property for the first point of every component.
    let units = fwd.units();
    for pair in branch.primaries.windows(2) {
        for comp in &pair[0].components {
            if let Some(img) = fwd.image(comp[0]) {
                assert!(distance_to_primary(img, &pair[1], units) <= 1e-4);
            }
        }
    }
    let mut csv = Vec::new();
    write_branch_csv(&branch, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 1 + branch.primaries.iter().map(Primary::len).sum::<usize>());
}

#[test]
fn stable_branch_contracts_under_the_forward_map() {
    let (fwd, fp) = reference();
    let c = [fp.point.u, fp.point.pu];
    let opts = ManifoldOptions {
        generations: 1,
        correction: None,
        ..Default::default()
    };
    let branch = grow_branch(
        &fwd.reversed(),
        &fwd,
        ManifoldKind::Stable,
        c,
        fp.eigen.vectors[0],
        1,
        1.0 / fp.eigen.values[0],
        &opts,
    )
    .unwrap();
    for q in branch.primaries[0].points() {
        let img = fwd.image(q).unwrap();
        assert!(dist(img, c) < dist(q, c));
    }
    // Along the stable eigenvector the image distance is lambda_1 d plus a
    // quadratic term that takes over beyond d ~ 4e-4.
    let s = fp.eigen.vectors[0];
    for d in [1e-4, 1e-3] {
        let q = [c[0] + d * s[0], c[1] + d * s[1]];
        let ratio = dist(fwd.image(q).unwrap(), c) / d;
        assert!(ratio < 5.0 * fp.eigen.values[0], "ratio {ratio:e}");
    }
}
