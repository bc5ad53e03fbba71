use std::path::Path;
use std::process::{Command, Output};

fn wqed(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wqed"));
    cmd.args(args).env_remove("WQED_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("WQED_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, format!("schema_version = \"1\"\n{body}")).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn negative_beta_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[dipole]\nbeta = -3.8\n");
    let o = wqed(&["validate", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"field\":\"beta\""), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[waveguide]\nhopping = 0.3\n");
    let o = wqed(&["validate", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hopping"));
}

#[test]
fn rwa_transmission_at_zero_coupling_is_all_ones() {
    let o = wqed(&["transmission", "--rwa", "--gauge", "dipole", "--g", "0"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("# schema=transmission_closed_form/1 "));
    let t = column(&csv, "T");
    assert_eq!(t.len(), 121);
    assert!(t.iter().all(|v| v.parse::<f64>().unwrap() == 1.0), "{t:?}");
}

#[test]
fn spectrum_has_documented_columns() {
    let o = wqed(&["spectrum", "--g", "0.1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let header = csv.lines().nth(1).unwrap();
    assert_eq!(header, "g,level_index,E_full,E_trunc_dipole,E_trunc_coulomb,lambda_c,status");
    assert_eq!(column(&csv, "status"), vec!["ok"; 5]);
}

#[test]
fn dumped_config_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[dipole]\nbeta = 4.1\n[sweep]\nmethod = \"polaron\"\ng_grid = { start = 0.0, stop = 0.3, points = 4 }\n",
    );
    let first = stdout(&wqed(&["validate", "--dump", "--config", &cfg], None));
    let again = dir.path().join("again.toml");
    std::fs::write(&again, &first).unwrap();
    let second = stdout(&wqed(&["validate", "--dump", "--config", again.to_str().unwrap()], None));
    assert_eq!(first, second);
    assert!(first.contains("beta = 4.1"));
}

#[test]
fn sweep_output_is_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sweep]\nmethod = \"closed_form\"\ng_grid = [0.0, 0.2]\nomega_grid = { start = 0.5, stop = 1.5, points = 11 }\n",
    );
    let cache = dir.path().join("cache");
    let a = wqed(&["sweep", "--config", &cfg], Some(&cache));
    let b = wqed(&["sweep", "--config", &cfg], Some(&cache));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}

#[test]
fn json_mirror_matches_csv_rows() {
    let o = wqed(&["spectral-density", "--g", "0.1", "--json"], None);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "spectral_density");
    assert_eq!(v["rows"].as_array().unwrap().len(), 121);
}

#[test]
fn infeasible_inverse_circuit_map_fails_cleanly() {
    let o = wqed(
        &["circuit-map", "--inverse", "--omega-r", "1", "--xi-r", "0.6", "--g-center", "0.1"],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    let ok = wqed(
        &["circuit-map", "--inverse", "--omega-r", "1", "--xi-r", "0.3", "--g-center", "0.1"],
        None,
    );
    assert!(ok.status.success());
    assert!(stdout(&ok).lines().nth(1).unwrap() == "c_r,l_r,l_c,l_sigma,n_eff");
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap.csv");
    let o = wqed(&["gap", "--g", "0,0.2", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let dp: Vec<f64> = column(&csv, "delta_prime").iter().map(|v| v.parse().unwrap()).collect();
    assert!((dp[0] - 1.0).abs() < 5e-3);
    assert!(dp[1] > dp[0]);
}
