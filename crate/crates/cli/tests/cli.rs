use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stirlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stirlab"));
    cmd.args(args).env_remove("STIRLAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn theta_prints_constant_and_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(&["theta", "--d", "3", "--tol", "1e-4", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("seed="));
    assert!(stdout.contains("theta_3 = 0.0860"), "{stdout}");
    let series = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert!(series.starts_with("n,term,partial_sum,tail_bound\n"));
    let m = manifest(tmp.path());
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn identity_residual_is_tiny() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(&["identity", "--d", "3", "--nmax", "30", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["result"]["max_residual"].as_f64().unwrap() <= 1e-12);
    let lines = fs::read_to_string(tmp.path().join("identity.csv")).unwrap();
    assert_eq!(lines.lines().count(), 31);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(tmp.path());
    assert_eq!(stirlab(&["survive", "--lambda", "2", "--theta", "1", "--out", out], &[]).status.code(), Some(2));
    assert_eq!(stirlab(&["survive", "--no-such-flag", "1"], &[]).status.code(), Some(2));
    assert_eq!(stirlab(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(stirlab(&["theta", "--d", "x", "--out", out], &[]).status.code(), Some(2));
    assert_eq!(stirlab(&["theta", "--d", "2", "--out", out], &[]).status.code(), Some(2));

    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "d=3\nwidth=4\n").unwrap();
    let o = stirlab(&["theta", "--config", cfg.to_str().unwrap(), "--out", out], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("width"));
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn non_convergence_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(&["theta", "--d", "3", "--tol", "1e-14", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# lineage run\nN=10\nreps=2000\nseed=5\n").unwrap();
    let o = stirlab(&["f1", "--config", cfg.to_str().unwrap(), "--N", "20", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(tmp.path());
    assert_eq!(m["config"]["n"], 20.0);
    assert_eq!(m["config"]["reps"], 2000);
    assert_eq!(m["seed"], 5);
    let csv = fs::read_to_string(tmp.path().join("lineage.csv")).unwrap();
    assert!(csv.starts_with("N,theta,d,reps,f1_mc,f1_analytic,z1_mc,z1_analytic,f1_stderr,z1_stderr\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("20,0,3,2000,"));
}

#[test]
fn manifest_reruns_bit_exactly_with_any_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = stirlab(
        &["masscurve", "--N", "3", "--lambda", "1.2", "--reps", "200", "--checkpoints", "1,2,4", "--horizon", "4", "--out", out_dir(a.path())],
        &[("STIRLAB_THREADS", "1")],
    );
    assert_eq!(o.status.code(), Some(0));
    let first = manifest(a.path());
    assert_eq!(first["config"]["threads"], 1);
    let cfg = a.path().join("rerun.cfg");
    fs::write(&cfg, first["config_text"].as_str().unwrap()).unwrap();
    let o = stirlab(
        &["masscurve", "--config", cfg.to_str().unwrap(), "--out", out_dir(b.path())],
        &[("STIRLAB_THREADS", "4")],
    );
    assert_eq!(o.status.code(), Some(0));
    let second = manifest(b.path());
    assert_eq!(second["config"]["threads"], 4);
    for name in ["mass_curve.csv", "trajectory.csv", "trajectory.json", "summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert_eq!(first["outputs"], second["outputs"]);
}

#[test]
fn survive_reports_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(
        &["survive", "--d", "3", "--N", "5", "--lambda", "2", "--reps", "200", "--horizon", "50", "--mass-cap", "100", "--seed", "3", "--out", out_dir(tmp.path())],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("survival.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let (rho, lo, hi) = (row[5], row[6], row[7]);
    assert!(0.0 <= lo && lo <= rho && rho <= hi && hi <= 1.0);
    assert!(rho > 0.2 && rho < 0.8, "{rho}");
}

#[test]
fn empty_report_has_only_the_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(&["report", "--d", "3", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(tmp.path().join("report.csv")).unwrap(),
        "d,N,lambda_lo,lambda_hat,lambda_hi,N_times_gap,theta,green_bound,konno_lower,flags\n"
    );
}

#[test]
fn coupling_and_z1_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = stirlab(&["coupling", "--d", "3", "--N", "2", "--reps", "2000", "--seed", "1", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("coupling.csv")).unwrap();
    assert!(csv.starts_with("d,N,t,reps,v_mean,v_stderr,w_mean,w_stderr,analytic,z_pooled\n"));

    let o = stirlab(&["z1", "--N", "8", "--reps", "5000", "--variant", "doubled", "--out", out_dir(tmp.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("N E[Z1]"));
}

#[test]
fn help_exits_cleanly() {
    let o = stirlab(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["theta", "green", "identity", "coupling", "z1", "f1", "survive", "masscurve", "critscan", "report"] {
        assert!(text.contains(sub), "{sub}");
    }
}
