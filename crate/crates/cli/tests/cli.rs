use std::path::PathBuf;
use std::process::{Command, Output};

fn ssmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssmap")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn classify_prints_region_one_and_its_roots() {
    let o = ssmap(&["classify", "--ell", "-800000", "--hs", "-1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("region I:"), "{text}");
    assert!(text.contains("v1 > 0, v2 imaginary, u1 > 0, u2 imaginary"), "{text}");
}

#[test]
fn escape_radius_inside_the_earth_is_rejected() {
    let o = ssmap(&["classify", "--ell", "0", "--hs", "0", "--r-escape", "100"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("invalid configuration") && err.contains("r_escape"), "{err}");
}

#[test]
fn unknown_commands_and_bad_flags_fail() {
    assert_eq!(ssmap(&["orbit"]).status.code(), Some(2));
    assert_eq!(ssmap(&["area", "--m", "many"]).status.code(), Some(2));
    assert_eq!(ssmap(&["classify", "--ell", "1"]).status.code(), Some(2));
}

#[test]
fn version_names_the_schema() {
    let o = ssmap(&["--version"]);
    assert!(stdout(&o).contains("schema 1"));
}

#[test]
fn flags_override_the_config_file() {
    let cfg = scratch("override.json");
    std::fs::write(&cfg, r#"{"params": {"f": 1e-8, "R": 6000.0}, "seed": 9}"#).unwrap();
    let o = ssmap(&["periods", "--ell", "348600", "--hs", "-0.13", "--config", cfg.to_str().unwrap(), "--f", "9.12e-9"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["params"]["f"], 9.12e-9);
    assert_eq!(v["config"]["params"]["R"], 6000.0);
    assert_eq!(v["config"]["seed"], 9);
    assert!(v["result"]["ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn malformed_config_is_invalid() {
    let cfg = scratch("bad.json");
    std::fs::write(&cfg, r#"{"params": {"gravity": 1}}"#).unwrap();
    let o = ssmap(&["brake", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_artifacts_carry_the_config_and_are_reproducible() {
    let run = |name: &str| {
        let path = scratch(name);
        let args = [
            "scan", "--umin", "2000", "--umax", "2700", "--pumin", "600", "--pumax", "840", "--nx", "4", "--ny", "3",
            "--jobs", "1", "--out",
        ];
        let mut all: Vec<&str> = args.to_vec();
        all.push(path.to_str().unwrap());
        assert!(ssmap(&all).status.success());
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("scan_a.csv"), run("scan_b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let cfg: serde_json::Value = serde_json::from_str(header.strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["command"], "scan");
    assert_eq!(cfg["args"]["nx"], 4);
    assert_eq!(lines.next(), Some("u,pu,class,winding"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn seeded_transit_check_is_deterministic() {
    let a = ssmap(&["transit-check", "--n", "5", "--seed", "4"]);
    let b = ssmap(&["transit-check", "--n", "5", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["result"]["entries"], 5);
    assert!(v["result"]["max_exit_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn iterate_writes_the_orbit() {
    let o = ssmap(&["iterate", "--point", "3581.34,-2.35", "--n", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,u,pu,winding");
    assert!(rows[1].starts_with("0,3581.34,-2.35,"));
    assert_eq!(rows.len(), 4);
}

#[test]
fn fixed_point_json_lists_both_saddles() {
    let o = ssmap(&["fixed", "--ell", "348600"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let fps = v["result"].as_array().unwrap();
    assert_eq!(fps.len(), 2);
    let u0 = fps[0]["point"]["u"].as_f64().unwrap();
    let u1 = fps[1]["point"]["u"].as_f64().unwrap();
    assert!((u0 + u1).abs() <= 1e-6 * u0.abs());
}
