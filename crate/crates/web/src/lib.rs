//! Browser bindings for a few sunshadow operations. Every export returns a
//! JSON string so the page needs no generated type glue.

use serde::Serialize;
use sunshadow::brake::solve_brake;
use sunshadow::ssmap::{find_fixed_point, SectionPoint, SunShadowMap};
use sunshadow::stark::{classify, quartic_structure, RootKind};
use sunshadow::PhysParams;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Classification {
    region: &'static str,
    description: &'static str,
    v_roots: [RootKind; 2],
    u_roots: [RootKind; 2],
}

/// Region and root pattern for `(ell_s, h_s)` with the default constants.
pub fn classify_json(ell_s: f64, h_s: f64) -> String {
    let p = PhysParams::default();
    let class = classify(ell_s, h_s, &p);
    let q = quartic_structure(ell_s, h_s, &p);
    let out = Classification {
        region: class.region.label(),
        description: class.region.description(),
        v_roots: q.v_kinds,
        u_roots: q.u_kinds,
    };
    serde_json::to_string(&out).expect("plain struct serializes")
}

#[derive(Serialize)]
struct Saddle {
    u: f64,
    pu: f64,
    lambda: [f64; 2],
    stable: [f64; 2],
    unstable: [f64; 2],
    residual: f64,
}

/// Both hyperbolic fixed points of the map at `ell_s`.
pub fn fixed_points_json(ell_s: f64) -> Result<String, sunshadow::Error> {
    let p = PhysParams::default();
    let map = SunShadowMap::new(p);
    let sol = solve_brake(ell_s, &p)?;
    let mut out = Vec::with_capacity(2);
    for (u, pu) in sol.fixed_point_seeds() {
        let fp = find_fixed_point(&map, &SectionPoint::new(u, pu, ell_s))?;
        out.push(Saddle {
            u: fp.point.u,
            pu: fp.point.pu,
            lambda: fp.eigen.values,
            stable: fp.eigen.vectors[0],
            unstable: fp.eigen.vectors[1],
            residual: fp.residual,
        });
    }
    Ok(serde_json::to_string(&out).expect("plain struct serializes"))
}

#[derive(Serialize)]
struct Step {
    n: usize,
    u: f64,
    pu: f64,
    winding: Option<i32>,
}

#[derive(Serialize)]
struct Orbit {
    steps: Vec<Step>,
    /// Label of the outcome that ended the orbit: `D` if all `n` returned.
    end: &'static str,
}

/// Up to `n` iterates of the map from `(u, p_u)`.
pub fn iterate_json(u: f64, pu: f64, ell_s: f64, n: usize) -> Result<String, sunshadow::Error> {
    let map = SunShadowMap::new(PhysParams::default());
    let mut q = SectionPoint::new(u, pu, ell_s);
    let mut steps = vec![Step {
        n: 0,
        u,
        pu,
        winding: None,
    }];
    let mut end = "D";
    for k in 1..=n {
        let o = map.apply(&q)?;
        match o.point {
            Some(next) => {
                steps.push(Step {
                    n: k,
                    u: next.u,
                    pu: next.pu,
                    winding: o.winding,
                });
                q = next;
            }
            None => {
                end = o.kind.label();
                break;
            }
        }
    }
    Ok(serde_json::to_string(&Orbit { steps, end }).expect("plain struct serializes"))
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(ell_s: f64, h_s: f64) -> String {
    classify_json(ell_s, h_s)
}

#[wasm_bindgen(js_name = fixedPoints)]
pub fn fixed_points_js(ell_s: f64) -> Result<String, JsError> {
    fixed_points_json(ell_s).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = iterate)]
pub fn iterate_js(u: f64, pu: f64, ell_s: f64, n: usize) -> Result<String, JsError> {
    iterate_json(u, pu, ell_s, n).map_err(|e| JsError::new(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sunshadow::params::REFERENCE_ELL;

    #[test]
    fn classify_reports_region_one() {
        let v: serde_json::Value = serde_json::from_str(&classify_json(-800_000.0, -1.0)).unwrap();
        assert_eq!(v["region"], "I");
        assert_eq!(v["u_roots"][0], "Positive");
    }

    #[test]
    fn fixed_points_are_saddles() {
        let v: serde_json::Value = serde_json::from_str(&fixed_points_json(REFERENCE_ELL).unwrap()).unwrap();
        for fp in v.as_array().unwrap() {
            let l = &fp["lambda"];
            assert!(l[0].as_f64().unwrap() < 1.0 && l[1].as_f64().unwrap() > 1.0);
        }
    }

    #[test]
    fn iterate_stops_at_forbidden_points() {
        let v: serde_json::Value = serde_json::from_str(&iterate_json(150.0, 1.0, REFERENCE_ELL, 3).unwrap()).unwrap();
        assert_eq!(v["end"], "F");
        assert_eq!(v["steps"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn out_of_window_ell_is_an_error() {
        assert!(fixed_points_json(2.0 * sunshadow::params::EARTH_MU).is_err());
    }
}
