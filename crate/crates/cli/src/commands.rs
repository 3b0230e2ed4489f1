use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use sunshadow::brake::solve_brake;
use sunshadow::checks;
use sunshadow::manifolds::{
    branch_consistency, grow_branch, write_branch_csv, Correction, ManifoldKind, ManifoldOptions, PlanarMap,
    SectionMap,
};
use sunshadow::params::REFERENCE_ELL;
use sunshadow::ssmap::{
    area_experiment, eigen2, find_fixed_point, scan_domain, write_grid_csv, FixedPoint, GridSpec, OutcomeKind,
    SectionPoint, SunShadowMap,
};
use sunshadow::stark::{classify as classify_region, period_u, period_v, quartic_structure, zero_velocity_points, RootKind};

use crate::config::{write_csv, write_json, CliError, CliResult, RunConfig};

type Out<'a> = Option<&'a PathBuf>;

/// A `u,pu` pair given on the command line.
#[derive(Debug, Clone, Copy)]
pub struct PointArg(pub f64, pub f64);

impl std::str::FromStr for PointArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(',').ok_or("expected u,pu")?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Self(parse(a)?, parse(b)?))
    }
}

impl Serialize for PointArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0, self.1].serialize(s)
    }
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct EnergyArgs {
    /// Stark integral value, km^3/s^2.
    #[arg(long)]
    pub ell: f64,
    /// Stark energy, km^2/s^2.
    #[arg(long)]
    pub hs: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct EllArgs {
    /// Stark integral of the section, km^3/s^2.
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct PointArgs {
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
    /// Section point as `u,pu`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: PointArg,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
    #[arg(long, default_value_t = -5000.0)]
    pub umin: f64,
    #[arg(long, default_value_t = 5000.0)]
    pub umax: f64,
    #[arg(long, default_value_t = -1500.0)]
    pub pumin: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub pumax: f64,
    #[arg(long, default_value_t = 200)]
    pub nx: usize,
    #[arg(long, default_value_t = 60)]
    pub ny: usize,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct IterateArgs {
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
    /// Start point as `u,pu`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: PointArg,
    /// Number of map applications.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct AreaArgs {
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
    /// Centre of the ellipse on the u axis.
    #[arg(long, default_value_t = 1250.0)]
    pub uc: f64,
    /// Semi-axis along u.
    #[arg(long, default_value_t = 250.0)]
    pub rc: f64,
    /// The semi-axis along p_u is rc / sqrt(c).
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Number of samples on the ellipse.
    #[arg(long, default_value_t = 20_000)]
    pub m: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Unstable,
    Stable,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ManifoldArgs {
    #[arg(long, default_value_t = REFERENCE_ELL)]
    pub ell: f64,
    #[arg(long, value_enum, default_value_t = Which::Unstable)]
    pub which: Which,
    /// Half of the eigenline to follow, `+1` or `-1`.
    #[arg(long = "dir", default_value_t = -1, allow_hyphen_values = true)]
    pub direction: i8,
    /// Fixed point: 0 for `u > 0`, 1 for its mirror.
    #[arg(long, default_value_t = 0)]
    pub fixed: usize,
    /// Generations grown after the initial primary.
    #[arg(long, default_value_t = 4)]
    pub gens: usize,
    /// First primary point's distance from the fixed point, section units.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Points of the initial primary.
    #[arg(long)]
    pub points: Option<usize>,
    /// Chord bound as a fraction of the bounding-box diagonal.
    #[arg(long, default_value_t = 1e-3)]
    pub spacing: f64,
    /// Cap on the points of one generation.
    #[arg(long, default_value_t = 20_000)]
    pub max_points: usize,
    /// Apply the MFLI correction to every generation (slow).
    #[arg(long)]
    pub correct: bool,
    /// Transverse samples of the correction.
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
    /// Iterates of the correction's indicator.
    #[arg(long, default_value_t = 8)]
    pub horizon: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TransitArgs {
    /// Number of shadow entries to check.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LeapsArgs {
    /// Launch radius on the night side, km.
    #[arg(long = "radius", default_value_t = 20_000.0)]
    pub radius: f64,
    /// Launch speed in units of the circular speed.
    #[arg(long, default_value_t = 1.02)]
    pub speed: f64,
    /// Fictitious time to propagate.
    #[arg(long, default_value_t = 40.0)]
    pub tau: f64,
    /// Regime switches allowed along the trajectory.
    #[arg(long, default_value_t = 10_000)]
    pub switch_budget: usize,
}

fn kind_text(k: RootKind) -> &'static str {
    match k {
        RootKind::Positive => "> 0",
        RootKind::Zero => "= 0",
        RootKind::Imaginary => "imaginary",
        RootKind::NonReal => "complex",
    }
}

pub fn classify(cfg: &RunConfig, a: &EnergyArgs, out: Out) -> CliResult<()> {
    let p = &cfg.params;
    let class = classify_region(a.ell, a.hs, p);
    let q = quartic_structure(a.ell, a.hs, p);
    if out.is_some() {
        #[derive(Serialize)]
        struct Report {
            region: &'static str,
            description: &'static str,
            bounded_u_branch_exists: bool,
            roots: sunshadow::stark::QuarticStructure,
        }
        let r = Report {
            region: class.region.label(),
            description: class.region.description(),
            bounded_u_branch_exists: class.bounded_u_branch_exists,
            roots: q,
        };
        return write_json(cfg, &r, out);
    }
    println!("region {}: {}", class.region.label(), class.region.description());
    println!(
        "roots: v1 {}, v2 {}, u1 {}, u2 {}",
        kind_text(q.v_kinds[0]),
        kind_text(q.v_kinds[1]),
        kind_text(q.u_kinds[0]),
        kind_text(q.u_kinds[1])
    );
    Ok(())
}

pub fn periods(cfg: &RunConfig, a: &EnergyArgs, out: Out) -> CliResult<()> {
    #[derive(Serialize)]
    struct Report {
        t_u: Option<f64>,
        t_v: f64,
        ratio: Option<f64>,
    }
    let p = &cfg.params;
    let t_v = period_v(a.ell, a.hs, p)?;
    let t_u = period_u(a.ell, a.hs, p).ok();
    write_json(cfg, &Report { t_u, t_v, ratio: t_u.map(|t| t_v / t) }, out)
}

pub fn zvp(cfg: &RunConfig, a: &EnergyArgs, out: Out) -> CliResult<()> {
    let pts = zero_velocity_points(a.ell, a.hs, &cfg.params);
    write_csv(cfg, out, |w| {
        writeln!(w, "x,y")?;
        pts.iter().try_for_each(|(x, y)| writeln!(w, "{x},{y}"))
    })
}

pub fn brake(cfg: &RunConfig, a: &EllArgs, out: Out) -> CliResult<()> {
    write_json(cfg, &solve_brake(a.ell, &cfg.params)?, out)
}

fn fixed_points(map: &SunShadowMap, ell: f64) -> CliResult<Vec<FixedPoint>> {
    let sol = solve_brake(ell, &map.params)?;
    sol.fixed_point_seeds()
        .iter()
        .map(|&(u, pu)| Ok(find_fixed_point(map, &SectionPoint::new(u, pu, ell))?))
        .collect()
}

pub fn fixed(cfg: &RunConfig, a: &EllArgs, out: Out) -> CliResult<()> {
    let map = SunShadowMap::new(cfg.params);
    write_json(cfg, &fixed_points(&map, a.ell)?, out)
}

pub fn jacobian(cfg: &RunConfig, a: &PointArgs, out: Out) -> CliResult<()> {
    #[derive(Serialize)]
    struct Report {
        image: Option<SectionPoint>,
        winding: Option<i32>,
        variational: [[f64; 2]; 2],
        finite_difference: [[f64; 2]; 2],
        finite_difference_error: [[f64; 2]; 2],
        determinant: f64,
        eigen: sunshadow::ssmap::Eigen2,
    }
    let map = SunShadowMap::new(cfg.params);
    let q = SectionPoint::new(a.point.0, a.point.1, a.ell);
    let (var, outcome) = map.jacobian_variational(&q)?;
    let (fd, err) = map.jacobian_fd(&q)?;
    let r = Report {
        image: outcome.point,
        winding: outcome.winding,
        variational: var,
        finite_difference: fd,
        finite_difference_error: err,
        determinant: var[0][0] * var[1][1] - var[0][1] * var[1][0],
        eigen: eigen2(&var),
    };
    write_json(cfg, &r, out)
}

pub fn scan(cfg: &RunConfig, a: &ScanArgs, out: Out) -> CliResult<()> {
    if a.nx < 2 || a.ny < 2 || !(a.umin < a.umax) || !(a.pumin < a.pumax) {
        return Err(CliError::ConfigInvalid("scan needs nx, ny >= 2 and min < max".into()));
    }
    let grid = GridSpec {
        u_min: a.umin,
        u_max: a.umax,
        pu_min: a.pumin,
        pu_max: a.pumax,
        nx: a.nx,
        ny: a.ny,
        ell_s: a.ell,
    };
    let cells = scan_domain(&SunShadowMap::new(cfg.params), &grid)?;
    write_csv(cfg, out, |w| write_grid_csv(&cells, w))
}

pub fn iterate(cfg: &RunConfig, a: &IterateArgs, out: Out) -> CliResult<()> {
    let map = SunShadowMap::new(cfg.params);
    let mut rows = vec![(SectionPoint::new(a.point.0, a.point.1, a.ell), None)];
    let mut stop = OutcomeKind::Returned;
    for _ in 0..a.n {
        let o = map.apply(&rows[rows.len() - 1].0)?;
        match o.point {
            Some(next) => rows.push((next, o.winding)),
            None => {
                stop = o.kind;
                break;
            }
        }
    }
    if stop != OutcomeKind::Returned {
        eprintln!("stopped after {} returns: {}", rows.len() - 1, stop.label());
    }
    write_csv(cfg, out, |w| {
        writeln!(w, "n,u,pu,winding")?;
        for (i, (q, wn)) in rows.iter().enumerate() {
            let wn = wn.map(|x| x.to_string()).unwrap_or_default();
            writeln!(w, "{i},{},{},{wn}", q.u, q.pu)?;
        }
        writeln!(w, "# end: {}", stop.label())
    })
}

pub fn area(cfg: &RunConfig, a: &AreaArgs, out: Out) -> CliResult<()> {
    let map = SunShadowMap::new(cfg.params);
    write_json(cfg, &area_experiment(&map, a.uc, a.rc, a.c, a.m, a.ell)?, out)
}

pub fn manifold(cfg: &RunConfig, a: &ManifoldArgs, out: Out) -> CliResult<()> {
    if a.direction.abs() != 1 {
        return Err(CliError::ConfigInvalid("--dir must be +1 or -1".into()));
    }
    let map = SunShadowMap::new(cfg.params);
    let fps = fixed_points(&map, a.ell)?;
    let fp = fps
        .get(a.fixed)
        .ok_or_else(|| CliError::ConfigInvalid("--fixed must be 0 or 1".into()))?;
    let fwd = SectionMap::forward(map, a.ell);
    let bwd = fwd.reversed();
    let opts = ManifoldOptions {
        offset: a.offset,
        primary_points: a.points,
        generations: a.gens,
        spacing: a.spacing,
        max_points: a.max_points,
        correction: a.correct.then_some(Correction {
            samples: a.samples,
            horizon: a.horizon,
            half_width: None,
        }),
    };
    let c = [fp.point.u, fp.point.pu];
    let [l1, l2] = fp.eigen.values;
    let [stable, unstable] = fp.eigen.vectors;
    let (growth, contracting): (&dyn PlanarMap, &dyn PlanarMap) = match a.which {
        Which::Unstable => (&fwd, &bwd),
        Which::Stable => (&bwd, &fwd),
    };
    let branch = match a.which {
        Which::Unstable => grow_branch(growth, contracting, ManifoldKind::Unstable, c, unstable, a.direction, l2, &opts)?,
        Which::Stable => grow_branch(growth, contracting, ManifoldKind::Stable, c, stable, a.direction, 1.0 / l1, &opts)?,
    };
    let check = branch_consistency(growth, &branch);
    eprintln!(
        "generations {}, points {}, max distance to next generation {:e} over {} points",
        branch.primaries.len(),
        branch.primaries.iter().map(|v| v.len()).sum::<usize>(),
        check.max_distance,
        check.checked
    );
    write_csv(cfg, out, |w| write_branch_csv(&branch, w))
}

pub fn transit_check(cfg: &RunConfig, a: &TransitArgs, out: Out) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report = checks::transit_check(a.n, || rng.gen::<f64>(), &cfg.params)?;
    write_json(cfg, &report, out)
}

pub fn leaps_check(mut cfg: RunConfig, a: &LeapsArgs, out: Out) -> CliResult<()> {
    cfg.params.switch_budget = a.switch_budget;
    cfg.params
        .validate()
        .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let report = checks::leaps_check(a.radius, a.speed, a.tau, &cfg.params)?;
    write_json(&cfg, &report, out)
}
