//! End-to-end tests of the binary: output schemas re-parse, exit codes
//! follow the contract (0 ok, 2 config, 3 numerical), and identical
//! config + seed produce byte-identical artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_eikonal")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary must run")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eikonal_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn print_defaults_is_a_valid_config() {
    let out = run(&["--print-defaults"]);
    assert!(out.status.success());
    let dir = temp_dir("defaults");
    let cfg = dir.join("defaults.toml");
    write(&cfg, &String::from_utf8(out.stdout).unwrap());
    // defaults describe the saddle; eval must succeed on them
    let out = run(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn eval_reports_the_flat_cone_interior() {
    let dir = temp_dir("eval");
    let cfg = dir.join("cfg.toml");
    write(
        &cfg,
        r#"
[field]
name = "quadratic_bowl"
dim = 1

[eval]
x = [0.5]
t = 1.0
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], eikonal::SCHEMA_VERSION);
    assert_eq!(v["u"], 0.0);
    assert_eq!(v["label"], "smooth");
    assert_eq!(v["Du"][0], 0.0);
    assert_eq!(v["Du"][1], 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn terminate_csv_reparses_and_cross_checks() {
    let dir = temp_dir("terminate");
    let cfg = dir.join("cfg.toml");
    write(
        &cfg,
        r#"
[field]
name = "saddle"
dim = 2

[terminate]
y0 = [1.0, 0.0]
t_max = 10.0
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "terminate"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    let header: Vec<&str> = rows[0].split(',').collect();
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(header.len(), fields.len());
    let col = |name: &str| -> usize { header.iter().position(|h| *h == name).unwrap() };
    let t_bar: f64 = fields[col("t_bar")].parse().unwrap();
    let t_s: f64 = fields[col("t_s")].parse().unwrap();
    assert!((t_bar - 1.0).abs() < 1e-3 && (t_s - 1.0).abs() < 1e-3);
    let gap: f64 = fields[col("method_gap_t_s")].parse().unwrap();
    assert!(gap < 1e-3, "method gap {gap}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn classify_and_spectrum_emit_valid_json() {
    let dir = temp_dir("classify");
    let cfg = dir.join("cfg.toml");
    write(
        &cfg,
        r#"
[field]
name = "saddle"
dim = 2

[classify]
points = [ { x = [2.0, 0.0], t = 1.0 }, { x = [0.0, 0.0], t = 1.0 } ]

[spectrum]
y0 = [1.0, 0.0]
det_times = [0.0, 0.5, 1.0]
blowup = false
t_max = 5.0
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "classify"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["points"][0]["label"], "t1");
    assert_eq!(v["points"][1]["label"], "sigma");

    let out = run(&["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let times = v["spectrum"]["conjugate_times"].as_array().unwrap();
    assert_eq!(times.len(), 1);
    assert!((times[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let det = v["det_samples"][1]["det"].as_f64().unwrap();
    assert!((det - 0.5).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

fn map_config(dir: &Path) -> String {
    format!(
        r#"
[field]
name = "linear"
dim = 1

[map]
lo = [-1.0]
hi = [1.0]
t_min = 0.1
t_max = 0.6
space_res = [16]
t_res = 8
strata = ["sigma", "t1"]
out_dir = "{}"
prefix = "lin"
probe_orders = [2]
"#,
        dir.display()
    )
}

#[test]
fn map_writes_artifacts_and_reports_zero_components_for_linear_data() {
    let dir = temp_dir("map");
    let out_dir = dir.join("out");
    let cfg = dir.join("cfg.toml");
    write(&cfg, &map_config(&out_dir));
    let out = run(&["--config", cfg.to_str().unwrap(), "map"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["components"], 0);

    // the component report must re-parse under the library schema
    let report_text = std::fs::read_to_string(v["report_json"].as_str().unwrap()).unwrap();
    let report: eikonal::sigmap::ComponentReport = serde_json::from_str(&report_text).unwrap();
    assert_eq!(report.schema_version, eikonal::SCHEMA_VERSION);
    assert_eq!(report.component_count, 0);

    // nodes CSV: one row per node, labels all smooth
    let nodes = std::fs::read_to_string(v["nodes_csv"].as_str().unwrap()).unwrap();
    let rows: Vec<&str> = nodes.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 16 * 8 + 1);
    assert!(rows[1..].iter().all(|r| r.contains(",smooth,")));

    // PGM slices: valid P5 headers, all-white rasters
    let slices = v["pgm_slices"].as_array().unwrap();
    assert_eq!(slices.len(), 8);
    let bytes = std::fs::read(slices[0].as_str().unwrap()).unwrap();
    assert!(bytes.starts_with(b"P5\n"));
    assert!(bytes.ends_with(&[255u8; 16][..]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn identical_config_and_seed_give_byte_identical_artifacts() {
    let dir = temp_dir("determinism");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let cfg_a = dir.join("a.toml");
    let cfg_b = dir.join("b.toml");
    write(&cfg_a, &map_config(&out_a));
    write(&cfg_b, &map_config(&out_b));
    let ra = run(&["--config", cfg_a.to_str().unwrap(), "--seed", "7", "map"]);
    let rb = run(&["--config", cfg_b.to_str().unwrap(), "--seed", "7", "map"]);
    assert!(ra.status.success() && rb.status.success());
    for name in ["lin_nodes.csv", "lin_components.json", "lin_t0000.pgm"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sampled_fields_load_from_csv() {
    let dir = temp_dir("sampled");
    let grid = dir.join("parabola.csv");
    let n = 41;
    let mut csv = format!("# 1D parabola samples\n1, -2.0, 2.0, {n}\n");
    for i in 0..n {
        let y = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
        csv.push_str(&format!("{}\n", y * y));
    }
    write(&grid, &csv);
    let cfg = dir.join("cfg.toml");
    write(
        &cfg,
        &format!(
            r#"
[field]
name = "sampled"
dim = 1
csv = "{}"
smoothness = "c2"

[eval]
x = [0.3]
t = 0.5
"#,
            grid.display()
        ),
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["u"].as_f64().unwrap().abs() < 1e-3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_2_with_json_on_stderr() {
    let dir = temp_dir("badcfg");
    let cfg = dir.join("bad.toml");
    write(&cfg, "[field]\nname = \"no_such_field\"\ndim = 1\n");
    let out = run(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "config");

    // unknown keys are rejected
    write(&cfg, "[field]\nname = \"saddle\"\ndim = 2\nbogus = 1\n");
    let out = run(&["--config", cfg.to_str().unwrap(), "eval"]);
    assert_eq!(out.status.code(), Some(2));

    // missing config flag
    let out = run(&["eval"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn numerical_failures_exit_3() {
    let dir = temp_dir("numfail");
    let cfg = dir.join("cfg.toml");
    // spectrum at a zero-gradient point: degenerate direction
    write(
        &cfg,
        r#"
[field]
name = "saddle"
dim = 2

[spectrum]
y0 = [0.0, 0.0]
det_times = [0.5]
blowup = false
t_max = 5.0
"#,
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "numerical");
    std::fs::remove_dir_all(&dir).ok();
}
