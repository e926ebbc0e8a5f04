use std::path::Path;
use std::process::{Command, Output};

use clockdil::PropagatorGrid;
use serde_json::Value;

fn clockdil(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clockdil"))
        .args(args)
        .env("CLOCKDIL_OUT_DIR", dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn fit(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("fit.json")).unwrap()).unwrap()
}

#[test]
fn dilate_amplitude_damping() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["dilate", "--model", "amplitude-damping", "--t-max", "3", "--cells", "300"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert!(m["residuals"]["dilation_identity"].as_f64().unwrap() <= 1e-8);
    assert_eq!(m["seed"], 0);
    let kraus = std::fs::read_to_string(dir.path().join("kraus.csv")).unwrap();
    assert!(kraus.starts_with("t,lambda_0,lambda_1,s_0,s_1,M0_00_re"));
}

#[test]
fn dilate_identity_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["dilate", "--model", "identity", "--cells", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let pg = PropagatorGrid::from_json(&std::fs::read_to_string(dir.path().join("propagators.json")).unwrap()).unwrap();
    for i in 0..pg.grid().len() {
        let u = pg.at_index(i).as_matrix();
        assert!((u - clockdil::numerics::identity(u.nrows())).norm() < 1e-12);
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[grid]\nt_max = 3.0\ncels = 10\n").unwrap();
    let out = clockdil(dir.path(), &["--config", cfg.to_str().unwrap(), "dilate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cels"));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("from-config");
    std::fs::write(
        &cfg,
        format!(
            "seed = 4\nout_dir = {:?}\n[model]\npreset = \"random\"\n[grid]\nt_max = 1.0\ncells = 40\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_clockdil"))
        .args(["--config", cfg.to_str().unwrap(), "dilate"])
        .env_remove("CLOCKDIL_OUT_DIR")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(&out_dir)["seed"], 4);
}

#[test]
fn decouple_amplitude_damping_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(
        dir.path(),
        &["decouple", "--model", "amplitude-damping", "--t", "1", "--n-min", "8", "--n-max", "4096"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let f = fit(dir.path());
    let slope = f["slope"].as_f64().unwrap();
    assert!((-0.6..=-0.4).contains(&slope), "slope {slope}");
    assert_eq!(f["classification"], "dissipative");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("n,t,bound,exact_lower,cells_per_interval\n"));
    let plot = std::fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 11);
}

#[test]
fn decouple_hamiltonian_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["decouple", "--model", "hamiltonian", "--n-min", "8", "--n-max", "1024"]);
    assert_eq!(out.status.code(), Some(0));
    let f = fit(dir.path());
    assert_eq!(f["classification"], "hamiltonian");
    assert!((f["slope"].as_f64().unwrap() + 1.0).abs() < 0.05);
}

#[test]
fn pauli_cancelled_hamiltonian_has_no_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["decouple", "--model", "hamiltonian-z", "--n-min", "8", "--n-max", "1024"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical floor"));
    assert!(dir.path().join("sweep.csv").exists());
    assert!(!dir.path().join("fit.json").exists());
}

#[test]
fn single_n_skips_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["decouple", "--n-list", "64"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate fit skipped"));
    assert!(!dir.path().join("fit.json").exists());
}

#[test]
fn n_list_must_be_multiple_of_set_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["decouple", "--n-list", "8,10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweeps_are_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "9", "decouple", "--model", "random", "--n-list", "8,32,128"];
    assert_eq!(clockdil(a.path(), &args).status.code(), Some(0));
    assert_eq!(clockdil(b.path(), &args).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("sweep.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn rate_fit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("n,t,bound,exact_lower,cells_per_interval\n");
    for n in [8usize, 16, 32, 64, 128, 256, 512, 1024] {
        csv.push_str(&format!("{n},1.0,{},0.0,8\n", 2.0 / n as f64));
    }
    let input = dir.path().join("in.csv");
    std::fs::write(&input, csv).unwrap();
    let out = clockdil(dir.path(), &["rate-fit", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((fit(dir.path())["slope"].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn pointstate_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["pointstate", "--demo", "oscillation", "--eps-levels", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("pointstate_oscillation.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 12);
    for (m, v) in values.iter().enumerate() {
        let want = if m % 2 == 0 { 4.0 / 3.0 } else { 2.0 / 3.0 };
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn pointstate_delta_converges_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["pointstate", "--demo", "delta", "--eps-levels", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("pointstate_delta.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| (1.0 - w[1]).abs() < (1.0 - w[0]).abs()));
}

#[test]
fn unknown_demo_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(clockdil(dir.path(), &["pointstate", "--demo", "sawtooth"]).status.code(), Some(2));
    assert_eq!(clockdil(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn channel_info_reports_choi_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = clockdil(dir.path(), &["channel-info", "--model", "amplitude-damping", "--t", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let info: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("channel_info.json")).unwrap()).unwrap();
    let eig = info["times"][1]["choi_eigenvalues"].as_array().unwrap();
    let e = (-1f64).exp();
    assert!((eig[0].as_f64().unwrap() - 0.5 * (1.0 + e)).abs() < 1e-12);
    assert!((eig[1].as_f64().unwrap() - 0.5 * (1.0 - e)).abs() < 1e-12);
}
