use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn magfiber(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magfiber")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL_SWEEP: [&str; 9] = ["sweep", "--m-max", "2", "--p-max", "2", "--xi-step", "0.5", "--intervals", "1000"];

#[test]
fn sweep_csv_shape() {
    let dir = TempDir::new().unwrap();
    let o = magfiber(&SMALL_SWEEP, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,p,xi,lambda,lambda_prime_fh,lambda_prime_bd");
    // 3 m values x 2 bands x 15 momenta
    assert_eq!(lines.len(), 1 + 3 * 2 * 15);
    let keys: Vec<(u32, u32, f64)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 7);
            (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert!(keys.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1) || w[0].2 < w[1].2));
    let mantissa = lines[1].split(',').nth(4).unwrap().split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn sweep_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for w in ["1", "4", "8"] {
        let name = format!("sweep_{w}.csv");
        let mut args = SMALL_SWEEP.to_vec();
        args.extend(["--workers", w, "--output", &name]);
        let o = magfiber(&args, dir.path());
        assert_eq!(code(&o), 0);
        files.push(std::fs::read(dir.path().join(&name)).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# small run\nm_max = 0\np-max=1\nxi-step = 1 # coarse\nintervals=800\n").unwrap();
    let o = magfiber(&["sweep", "--config", "run.cfg", "--xi-max", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 4);

    let o = magfiber(&["sweep", "--config", "run.cfg", "--m-max", "1", "--xi-max", "2"], dir.path());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 8);

    std::fs::write(dir.path().join("bad.cfg"), "xi_stepp = 1\n").unwrap();
    assert_eq!(code(&magfiber(&["sweep", "--config", "bad.cfg"], dir.path())), 2);
    assert_eq!(code(&magfiber(&["sweep", "--config", "missing.cfg"], dir.path())), 2);
}

#[test]
fn invalid_arguments_exit_2_without_output() {
    let dir = TempDir::new().unwrap();
    let cases: [&[&str]; 9] = [
        &["sweep", "--xi-step", "0", "--output", "out.csv"],
        &["sweep", "--n", "2", "--output", "out.csv"],
        &["sweep", "--xi-max", "-3", "--output", "out.csv"],
        &["scaling", "--energy", "3", "--output", "out.csv"],
        &["scaling", "--energy", "0.5", "--output", "out.csv"],
        &["classical", "--dt", "-1", "--output", "out.csv"],
        &["current", "--window-a", "0.5", "--window-b", "1.5", "--report", "out.csv"],
        &["current", "--n", "3", "--report", "out.csv"],
        &["sweep", "--bogus"],
    ];
    for args in cases {
        let o = magfiber(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!dir.path().join("out.csv").exists(), "{args:?} wrote output");
    }
    assert_eq!(code(&magfiber(&["sweep", "--output", "no/such/dir/out.csv"], dir.path())), 2);
    assert_eq!(code(&magfiber(&["acceptance", "--only", "14"], dir.path())), 2);
    assert_eq!(code(&magfiber(&["--help"], dir.path())), 0);
}

#[test]
fn numerical_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    // too short for three radial minima
    let o = magfiber(&["classical", "--t-max", "1", "--report", "r.json"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("r.json").exists());
    // basis too small for the hierarchy
    let o = magfiber(&["asym", "--order", "6", "--basis", "3", "--intervals", "1000"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_report_shape() {
    let dir = TempDir::new().unwrap();
    let o = magfiber(&["classical", "--t-max", "60", "--report", "r.json", "--output", "t.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["t-max"], 60.0);
    assert!(v["results"].is_object());
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        for key in ["name", "value", "bound", "pass"] {
            assert!(c.get(key).is_some(), "check lacks {key}");
        }
        assert_eq!(c["pass"], true, "{c}");
    }
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,z,vx,vy,vz,E,sigma,c\n"));

    let o = magfiber(&["convergence", "--levels", "4"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["results"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn asym_reports_coefficients() {
    let dir = TempDir::new().unwrap();
    let o = magfiber(&["asym", "--order", "6", "--intervals", "2000"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let alphas = v["results"]["alphas"].as_array().unwrap();
    assert_eq!(alphas.len(), 6);
    assert!((alphas[3]["alpha"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(v["results"]["coupling_dependent_orders"], serde_json::json!([6]));
}

#[test]
fn acceptance_subset() {
    let dir = TempDir::new().unwrap();
    let o = magfiber(&["acceptance", "--only", "1,3", "--report", "acc.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert!(dir.path().join("acc.json").exists());
}
