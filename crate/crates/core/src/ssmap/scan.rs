use std::io::{self, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OutcomeKind, SectionPoint, SunShadowMap};
use crate::error::{Error, Result};

/// Rectangle of the section plane sampled on an `nx` by `ny` node grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub pu_min: f64,
    pub pu_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub ell_s: f64,
}

impl GridSpec {
    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<SectionPoint> {
        (0..self.ny)
            .flat_map(|j| {
                (0..self.nx).map(move |i| {
                    SectionPoint::new(
                        Self::axis(self.u_min, self.u_max, self.nx, i),
                        Self::axis(self.pu_min, self.pu_max, self.ny, j),
                        self.ell_s,
                    )
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub u: f64,
    pub pu: f64,
    pub kind: OutcomeKind,
    pub winding: Option<i32>,
}

/// Classifies every node: closed-form forbidden test first, then one map
/// application. Numerical failures at a node are labelled singular.
pub fn scan_domain(map: &SunShadowMap, grid: &GridSpec) -> Result<Vec<GridCell>> {
    if grid.nx == 0 || grid.ny == 0 || !(grid.u_max >= grid.u_min) || !(grid.pu_max >= grid.pu_min) {
        return Err(Error::InvalidParams("empty or inverted scan rectangle".into()));
    }
    let nodes = grid.nodes();
    let classify = |q: &SectionPoint| -> GridCell {
        let (kind, winding) = match map.apply(q) {
            Ok(out) => (out.kind, out.winding),
            Err(_) => (OutcomeKind::Singular, None),
        };
        GridCell {
            u: q.u,
            pu: q.pu,
            kind,
            winding,
        }
    };
    #[cfg(feature = "parallel")]
    let cells = nodes.par_iter().map(classify).collect();
    #[cfg(not(feature = "parallel"))]
    let cells = nodes.iter().map(classify).collect();
    Ok(cells)
}

/// Writes `u,pu,class,winding`; the winding is empty unless the node returned.
pub fn write_grid_csv<W: Write>(cells: &[GridCell], mut out: W) -> io::Result<()> {
    writeln!(out, "u,pu,class,winding")?;
    for c in cells {
        let w = c.winding.map(|w| w.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", c.u, c.pu, c.kind.label(), w)?;
    }
    Ok(())
}
