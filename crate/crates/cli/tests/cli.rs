//! End-to-end runs of the `gqbm` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gqbm(args: &[&str], dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gqbm"));
    cmd.args(args).current_dir(dir);
    for (k, _) in std::env::vars() {
        if k.starts_with("GQBM_") {
            cmd.env_remove(k);
        }
    }
    cmd.output().expect("binary runs")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const SMALL: [&str; 4] = ["--steps", "400", "--t-end", "4"];

#[test]
fn coeffs_writes_the_documented_columns_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = gqbm(&[&["coeffs", "--out", "run"], &SMALL[..]].concat(), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    assert_eq!(
        header(&run.join("coeffs.csv")),
        "t,gamma,gamma_tilde,re_gamma_bar,im_gamma_bar,omega_s_prime,re_omega_bar_prime,im_omega_bar_prime"
    );
    let rows = fs::read_to_string(run.join("coeffs.csv")).unwrap().lines().count();
    assert_eq!(rows, 402);
    // α = 1 by default, so the HPZ table is present too.
    assert!(run.join("hpz.csv").exists());
    let manifest: toml::Table = fs::read_to_string(run.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["run"]["command"].as_str(), Some("coeffs"));
    assert_eq!(manifest["config"]["grid"]["n_steps"].as_integer(), Some(400));
    assert_eq!(manifest["config"]["model"]["omega_s"].as_str(), Some("paper-default"));
    assert!(manifest["results"]["hpz_max_identity_residual"].as_float().unwrap() < 1e-12);
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = gqbm(&[&["evolve", "--alpha", "0.5", "--out", name], &SMALL[..]].concat(), dir.path());
        assert!(out.status.success());
    }
    for file in ["moments.csv", "coeffs.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn invalid_parameters_exit_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = gqbm(&["coeffs", "--gamma0", "-1", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("run").exists(), "nothing is written before validation");

    let out = gqbm(&["greens", "--steps", "0", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_configuration_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[model]\ngama0 = 1e-4\n").unwrap();
    let out = gqbm(&["kernels", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama0"));
}

#[test]
fn file_values_are_overridden_by_the_environment_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[model]\nalpha = 0.2\n[grid]\nt_end = 2.0\nn_steps = 100\n").unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gqbm"));
    let out = cmd
        .args(["kernels", "--config", "run.toml", "--steps", "50"])
        .env("GQBM_ALPHA", "0.7")
        .env("GQBM_OUT", "env-out")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: toml::Table = fs::read_to_string(dir.path().join("env-out/manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["config"]["model"]["alpha"].as_float(), Some(0.7));
    assert_eq!(manifest["config"]["grid"]["t_end"].as_float(), Some(2.0));
    assert_eq!(manifest["config"]["grid"]["n_steps"].as_integer(), Some(50));
}

#[test]
fn jolt_sweep_writes_one_table_per_alpha_and_a_deviation_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sweep.toml"), "[sweep]\nalphas = [0.0, 0.5, 1.0]\n").unwrap();
    let out = gqbm(&[&["jolt-sweep", "--config", "sweep.toml", "--out", "run"], &SMALL[..]].concat(), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    for a in ["0", "0.5", "1"] {
        assert!(run.join(format!("alpha_{a}/coeffs.csv")).exists());
        assert!(run.join(format!("alpha_{a}/jolt.csv")).exists());
    }
    let text = fs::read_to_string(run.join("jolt_deviation.csv")).unwrap();
    assert!(text.starts_with("alpha,"));
    assert_eq!(text.lines().count(), 4);
}
