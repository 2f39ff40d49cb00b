use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use csie_cli::sha256_hex;
use serde_json::Value;

const CUBE: &str = r#"
[geometry]
generator = "cube"
edge = 1.0
divisions = 1

[frequency]
wavelength = 2.0

[[formulation]]
kind = "efie"

[[formulation]]
kind = "csie-j"
alpha = 10.0

[[formulation]]
kind = "csie-jm"
alpha = 10.0
"#;

struct Run {
    code: i32,
    out: PathBuf,
    stderr: String,
}

fn csie(sub: &str, config: &str, dir: &Path, name: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let output = Command::new(env!("CARGO_BIN_EXE_csie"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: output.status.code().unwrap(),
        out,
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv(dir: &Path, name: &str) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join(name))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_writes_artifacts_with_matching_hashes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = csie("solve", CUBE, tmp.path(), "solve", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let m = manifest(&run.out);
    assert_eq!(m["command"], "solve");
    assert_eq!(m["mesh"]["unknowns"], 18);
    let outputs = m["outputs"].as_object().unwrap();
    // Three files per run plus the summary.
    assert_eq!(outputs.len(), 3 * 3 + 1);
    for (name, hash) in outputs {
        let bytes = fs::read(run.out.join(name)).unwrap();
        assert_eq!(hash.as_str().unwrap(), sha256_hex(&bytes), "{name}");
    }
    // The manifest is the last file written.
    let stamp = |p: PathBuf| fs::metadata(p).unwrap().modified().unwrap();
    let last = stamp(run.out.join("manifest.json"));
    assert!(outputs.keys().all(|n| stamp(run.out.join(n)) <= last));

    let rows = csv(&run.out, "summary.csv");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[5] == "converged"));
    let iters = |label: &str| -> usize { rows.iter().find(|r| r[1] == label).unwrap()[6].parse().unwrap() };
    // The reduced system needs fewer iterations than the block system.
    assert!(iters("01-csie-j") < iters("02-csie-jm"));
    // Without a reference sphere the error column stays empty.
    assert!(rows.iter().all(|r| r[9].is_empty()));

    let ff = fs::read_to_string(run.out.join("f000-01-csie-j-farfield.csv")).unwrap();
    assert!(ff.starts_with("theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi\n"));
    assert_eq!(ff.lines().count(), 1 + 614);
    let rcs = fs::read_to_string(run.out.join("f000-01-csie-j-rcs.csv")).unwrap();
    assert!(rcs.starts_with("theta_deg,phi_deg,sigma_dbsm\n"));
}

#[test]
fn outputs_repeat_bit_for_bit_across_threads_and_cache_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let cache = cache.to_str().unwrap();
    let cold = csie("solve", CUBE, tmp.path(), "cold", &["--threads", "1", "--cache", cache]);
    let warm = csie("solve", CUBE, tmp.path(), "warm", &["--threads", "3", "--cache", cache]);
    let plain = csie("solve", CUBE, tmp.path(), "plain", &["--threads", "2"]);
    for r in [&cold, &warm, &plain] {
        assert_eq!(r.code, 0, "{}", r.stderr);
    }
    assert_eq!(fs::read_dir(tmp.path().join("cache")).unwrap().count(), 2, "T and K dumps");
    let outputs = |r: &Run| manifest(&r.out)["outputs"].clone();
    assert_eq!(outputs(&cold), outputs(&warm));
    assert_eq!(outputs(&cold), outputs(&plain));
}

#[test]
fn sweep_alias_runs_every_point() {
    let tmp = tempfile::tempdir().unwrap();
    let config = CUBE.replace("wavelength = 2.0", "start = 1.4e8\nstop = 1.6e8\npoints = 3");
    let run = csie("sweep", &config, tmp.path(), "sweep", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv(&run.out, "summary.csv");
    assert_eq!(rows.len(), 9);
    assert_eq!(manifest(&run.out)["frequencies_hz"].as_array().unwrap().len(), 3);
    assert!(run.out.join("f002-02-csie-jm-rcs.csv").exists());
}

#[test]
fn mie_reference_fills_the_error_column() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"
[geometry]
generator = "icosphere"
diameter = 1.0
subdivisions = 1

[frequency]
hz = 1.0e8

[[formulation]]
kind = "efie"

[[formulation]]
kind = "csie-j"
"#;
    let run = csie("solve", config, tmp.path(), "mie", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    for row in csv(&run.out, "summary.csv") {
        let err: f64 = row[9].parse().unwrap();
        assert!(err < -10.0 && err > -60.0, "{row:?}");
    }
}

#[test]
fn unconverged_runs_give_exit_code_two_and_the_rest_continue() {
    let tmp = tempfile::tempdir().unwrap();
    let config = format!("{CUBE}\n[[formulation]]\nkind = \"csie-jm\"\ntol = 1e-12\n\n[solver]\nmax_iter = 3\n");
    let run = csie("solve", &config, tmp.path(), "partial", &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    let m = manifest(&run.out);
    let runs = m["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().any(|r| r["status"] == "not-converged"));
    assert!(run.out.join("f000-03-csie-jm-history.csv").exists());
}

#[test]
fn config_errors_give_exit_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let no_formulations = "[geometry]\ngenerator = \"cube\"\nedge = 1.0\ndivisions = 1\n[frequency]\nhz = 1e8\n";
    let run = csie("solve", no_formulations, tmp.path(), "empty", &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("formulation"), "{}", run.stderr);
    assert!(!run.out.join("manifest.json").exists());

    assert_eq!(csie("solve", "not toml [", tmp.path(), "syntax", &[]).code, 1);
    assert_eq!(csie("solve", CUBE, tmp.path(), "threads", &["--threads", "0"]).code, 1);
    assert_eq!(csie("solve", CUBE, tmp.path(), "flag", &["--bogus"]).code, 1);

    let missing = Command::new(env!("CARGO_BIN_EXE_csie"))
        .args(["solve", "--config", "/nonexistent/exp.toml", "--out"])
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn spectrum_reports_condition_and_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let run = csie("spectrum", CUBE, tmp.path(), "spectrum", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv(&run.out, "condition.csv");
    let dim = |label: &str| -> usize { rows.iter().find(|r| r[1] == label).unwrap()[5].parse().unwrap() };
    assert_eq!(dim("00-efie"), 18);
    assert_eq!(dim("01-csie-j"), 18);
    assert_eq!(dim("02-csie-jm"), 36);
    for row in &rows {
        let cond: f64 = row[6].parse().unwrap();
        assert!(cond >= 1.0 && cond.is_finite());
    }
    let spec = csv(&run.out, "f000-02-csie-jm-spectrum.csv");
    assert_eq!(spec.len(), 36);
    let values: Vec<f64> = spec.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(values[0], 1.0);
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn spectrum_size_guard_is_a_run_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // 7680 unknowns; the guard trips before any assembly.
    let config = "[geometry]\ngenerator = \"icosphere\"\ndiameter = 1.0\nsubdivisions = 4\n\
                  [frequency]\nhz = 1e8\n[[formulation]]\nkind = \"csie-jm\"\n";
    let run = csie("spectrum", config, tmp.path(), "guard", &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    let m = manifest(&run.out);
    assert_eq!(m["runs"][0]["status"], "failed");
    assert!(m["runs"][0]["message"].as_str().unwrap().contains("4000"));
}

#[test]
fn mesh_info_writes_edge_statistics() {
    let tmp = tempfile::tempdir().unwrap();
    let config = CUBE.replace("wavelength = 2.0", "start = 1e8\nstop = 3e8\npoints = 2");
    let run = csie("mesh-info", &config, tmp.path(), "mesh", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv(&run.out, "mesh_quality.csv");
    let get = |k: &str| -> f64 { rows.iter().find(|r| r[0] == k).unwrap()[1].parse().unwrap() };
    assert_eq!(get("triangles"), 12.0);
    assert_eq!(get("edges"), 18.0);
    // Reported against the shortest wavelength of the sweep.
    let lambda = csie_core::constants::C0 / 3e8;
    assert!((get("wavelength_m") - lambda).abs() < 1e-12);
    assert!((get("min_edge_per_wavelength") - 1.0 / lambda).abs() < 1e-9);
}

#[test]
fn alpha_tradeoff_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "[geometry]\ngenerator = \"icosphere\"\ndiameter = 1.0\nsubdivisions = 1\n[frequency]\nhz = 1.5e8\n";
    let single = format!("{base}[alpha_tradeoff]\nalphas = [2.7]\n");
    let run = csie("alpha-tradeoff", &single, tmp.path(), "single", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = fs::read_to_string(run.out.join("alpha_tradeoff.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("alpha,iterations,error_db\n2.7,"));
    assert!(!run.out.join("comb_tradeoff.csv").exists());

    let both = format!("{base}[alpha_tradeoff]\nalphas = [0.5, 1.0]\ncombs = [0.2, 0.9]\n");
    let run = csie("alpha-tradeoff", &both, tmp.path(), "both", &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(csv(&run.out, "alpha_tradeoff.csv").len(), 2);
    let combs = csv(&run.out, "comb_tradeoff.csv");
    assert_eq!(combs.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["0.2", "0.9"]);

    // A cube has no Mie reference; a sweep has no single frequency.
    let cube = CUBE.to_string() + "[alpha_tradeoff]\nalphas = [1.0]\n";
    assert_eq!(csie("alpha-tradeoff", &cube, tmp.path(), "cube", &[]).code, 1);
    let sweep = both.replace("hz = 1.5e8", "start = 1e8\nstop = 2e8\npoints = 2");
    assert_eq!(csie("alpha-tradeoff", &sweep, tmp.path(), "sweep", &[]).code, 1);
}

#[test]
fn tradeoff_on_the_480_unknown_sphere() {
    let tmp = tempfile::tempdir().unwrap();
    // ka = 1.6 on a 1 m sphere.
    let hz = 3.2 * csie_core::constants::C0 / (2.0 * std::f64::consts::PI);
    let config = format!(
        "[geometry]\ngenerator = \"icosphere\"\ndiameter = 1.0\nsubdivisions = 2\n[frequency]\nhz = {hz:?}\n\
         [[formulation]]\nkind = \"efie\"\n\
         [alpha_tradeoff]\nalphas = [0.5, 1.0, 2.7, 10.0]\ncombs = [0.2, 0.5, 0.9]\n"
    );
    let trade = csie("alpha-tradeoff", &config, tmp.path(), "trade", &[]);
    let efie = csie("solve", &config, tmp.path(), "efie", &[]);
    assert_eq!(trade.code, 0, "{}", trade.stderr);
    assert_eq!(efie.code, 0, "{}", efie.stderr);
    let num = |r: &Vec<String>, i: usize| -> f64 { r[i].parse().unwrap() };

    let alphas = csv(&trade.out, "alpha_tradeoff.csv");
    let errs: Vec<f64> = alphas.iter().map(|r| num(r, 2)).collect();
    let spread = errs.iter().cloned().fold(f64::MIN, f64::max) - errs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 3.0, "{errs:?}");

    // Raising the EFIE share moves CFIE towards the EFIE error at a growing iteration count.
    let efie_err = num(&csv(&efie.out, "summary.csv")[0], 9);
    let combs = csv(&trade.out, "comb_tradeoff.csv");
    let gap = |r: &Vec<String>| (num(r, 2) - efie_err).abs();
    assert!(gap(&combs[2]) < gap(&combs[0]), "{combs:?} vs {efie_err}");
    assert!(combs.windows(2).all(|w| num(&w[0], 1) < num(&w[1], 1)), "{combs:?}");
}
