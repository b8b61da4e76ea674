use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paramfp::experiment::{ExperimentConfig, ExperimentKind, Summary};

fn paramfp() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_paramfp"));
    c.env_remove("OUTPUT_DIR");
    c
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path
}

fn short_double_well(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_double_well();
    cfg.output_dir = out.to_path_buf();
    cfg.flow.t_final = 0.3;
    cfg.flow.n = 3000;
    cfg
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_line(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error ")).collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    lines[0].to_string()
}

fn hist_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("hist_"))
        .collect();
    v.sort();
    v
}

#[test]
fn default_config_round_trips() {
    let out = paramfp().arg("print-default-config").output().unwrap();
    assert_ok(&out);
    let cfg = ExperimentConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::default_double_well().resolved());
}

#[test]
fn run_writes_documented_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cfg = short_double_well(&out_dir);
    let path = write_config(tmp.path(), "run.toml", &cfg);
    assert_ok(&paramfp().arg("run").arg(&path).output().unwrap());

    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let header: Vec<String> = (1..=100).map(|k| format!("theta_{k}")).collect();
    assert_eq!(traj.lines().next().unwrap(), format!("t,{},F,cond_G,ridge", header.join(",")));
    assert_eq!(traj.lines().count(), 1 + 301);
    let row: Vec<&str> = traj.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0.0000000000000000e0");

    let hists = hist_files(&out_dir);
    assert_eq!(hists.len(), 4);
    for h in &hists {
        let text = fs::read_to_string(h).unwrap();
        assert_eq!(text.lines().next().unwrap(), "bin_left,bin_right,count,normalized_height");
        let total: f64 = text
            .lines()
            .skip(1)
            .map(|l| {
                let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
                (c[1] - c[0]) * c[3]
            })
            .sum();
        assert_eq!(text.lines().count(), 81);
        assert!((total - 1.0).abs() < 1e-8, "{}: {total}", h.display());
    }
    let samples = fs::read_to_string(out_dir.join("snapshots/samples_0000300.csv")).unwrap();
    assert_eq!(samples.lines().next().unwrap(), "x");
    assert_eq!(samples.lines().count(), 3001);

    let summary = Summary::load(&out_dir.join("summary.toml")).unwrap();
    assert_eq!(summary.run.status, "complete");
    assert_eq!(summary.config, cfg.resolved());
    assert!(summary.metrics["w1_to_gibbs"] > 0.0);
}

#[test]
fn resolved_config_in_summary_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let path = write_config(tmp.path(), "run.toml", &short_double_well(&out_dir));
    assert_ok(&paramfp().arg("run").arg(&path).output().unwrap());
    let traj = fs::read(out_dir.join("trajectory.csv")).unwrap();
    let summary_bytes = fs::read(out_dir.join("summary.toml")).unwrap();

    let summary = Summary::load(&out_dir.join("summary.toml")).unwrap();
    fs::remove_dir_all(&out_dir).unwrap();
    let again = write_config(tmp.path(), "again.toml", &summary.config);
    assert_ok(&paramfp().arg("run").arg(&again).output().unwrap());
    assert_eq!(fs::read(out_dir.join("trajectory.csv")).unwrap(), traj);
    assert_eq!(fs::read(out_dir.join("summary.toml")).unwrap(), summary_bytes);
}

#[test]
fn zero_steps_emit_one_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut cfg = short_double_well(&out_dir);
    cfg.flow.t_final = 0.0;
    let path = write_config(tmp.path(), "run.toml", &cfg);
    assert_ok(&paramfp().arg("run").arg(&path).output().unwrap());
    assert_eq!(hist_files(&out_dir).len(), 1);
    assert_eq!(fs::read_to_string(out_dir.join("trajectory.csv")).unwrap().lines().count(), 2);
}

#[test]
fn output_dir_env_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = short_double_well(&tmp.path().join("ignored"));
    cfg.flow.t_final = 0.01;
    let path = write_config(tmp.path(), "run.toml", &cfg);
    let target = tmp.path().join("env-out");
    let out = paramfp().arg("run").arg(&path).env("OUTPUT_DIR", &target).output().unwrap();
    assert_ok(&out);
    assert!(target.join("summary.toml").exists());
    assert!(!tmp.path().join("ignored").exists());
    let summary = Summary::load(&target.join("summary.toml")).unwrap();
    assert_eq!(summary.config.output_dir, target);
}

#[test]
fn bad_configs_fail_with_one_error_line() {
    let tmp = tempfile::tempdir().unwrap();
    let good = short_double_well(&tmp.path().join("out")).to_toml_string().unwrap();

    let unknown = tmp.path().join("unknown.toml");
    fs::write(&unknown, good.replace("[flow]", "[flow]\nspeed = 2")).unwrap();
    let line = error_line(&paramfp().arg("run").arg(&unknown).output().unwrap());
    assert!(line.starts_with("error kind=config"), "{line}");
    assert!(line.contains("speed"), "{line}");

    let negative = tmp.path().join("negative.toml");
    fs::write(&negative, good.replace("beta = 0.25", "beta = -1.0")).unwrap();
    assert!(error_line(&paramfp().arg("run").arg(&negative).output().unwrap()).starts_with("error kind=config"));

    let missing = tmp.path().join("missing.toml");
    assert!(error_line(&paramfp().arg("run").arg(&missing).output().unwrap()).starts_with("error kind=io"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn affine_exact_ou_reports_closed_form_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default_ou();
    cfg.experiment = ExperimentKind::AffineExact;
    cfg.output_dir = tmp.path().join("out");
    let path = write_config(tmp.path(), "ou.toml", &cfg);
    assert_ok(&paramfp().arg("run").arg(&path).output().unwrap());
    let s = Summary::load(&cfg.output_dir.join("summary.toml")).unwrap();
    assert!((s.metrics["variance"] - 1.40600).abs() < 1e-5);
    assert!((s.metrics["variance"] - (1.0 + 3.0 * (-2.0f64).exp())).abs() < 1e-6);
    let traj = fs::read_to_string(cfg.output_dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,gamma_1_1,b_1,F");
}

fn compare_report(dir: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(dir.join("compare.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,w1,mean_a,mean_b,mean_diff,variance_a,variance_b,variance_diff"
    );
    text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn run_compared_with_itself_has_zero_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "a.toml", &short_double_well(&tmp.path().join("a")));
    let report = tmp.path().join("report");
    let out = paramfp().arg("compare").arg(&path).arg(&path).arg("--output").arg(&report).output().unwrap();
    assert_ok(&out);
    let rows = compare_report(&report);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[4] == 0.0 && r[7] == 0.0));
}

#[test]
fn mismatched_time_grids_are_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let a = short_double_well(&tmp.path().join("a"));
    let mut b = short_double_well(&tmp.path().join("b"));
    b.flow.snapshot_stride = 50;
    let pa = write_config(tmp.path(), "a.toml", &a);
    let pb = write_config(tmp.path(), "b.toml", &b);
    let out = paramfp().arg("compare").arg(&pa).arg(&pb).output().unwrap();
    assert!(error_line(&out).starts_with("error kind=time-grid-mismatch"));
}

#[test]
fn parametric_flow_matches_fd_on_ou() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = ExperimentConfig::default_ou();
    a.output_dir = tmp.path().join("flow");
    let mut b = a.clone();
    b.experiment = ExperimentKind::FdOracle;
    b.output_dir = tmp.path().join("fd");
    let pa = write_config(tmp.path(), "a.toml", &a);
    let pb = write_config(tmp.path(), "b.toml", &b);
    let report = tmp.path().join("report");
    assert_ok(&paramfp().arg("compare").arg(&pa).arg(&pb).arg("--output").arg(&report).output().unwrap());
    let max_w1 = compare_report(&report).iter().map(|r| r[1]).fold(0.0, f64::max);
    assert!(max_w1 <= 0.05, "max W1 {max_w1}");
}

#[test]
fn compare_experiment_config_runs_both_sides() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = ExperimentConfig::default_ou();
    a.flow.t_final = 0.2;
    a.output_dir = tmp.path().join("flow");
    let mut b = a.clone();
    b.experiment = ExperimentKind::SdeOracle;
    b.output_dir = tmp.path().join("sde");
    write_config(tmp.path(), "a.toml", &a);
    write_config(tmp.path(), "b.toml", &b);
    let cmp = format!(
        "experiment = \"compare\"\nseed = 0\nbeta = 1.0\noutput_dir = {:?}\n\n[potential]\nkind = \"quadratic\"\nsigma = [1.0]\nmu = [0.0]\n\n[compare]\na = \"a.toml\"\nb = \"b.toml\"\n",
        tmp.path().join("report").to_string_lossy()
    );
    let path = tmp.path().join("compare.toml");
    fs::write(&path, cmp).unwrap();
    assert_ok(&paramfp().arg("run").arg(&path).output().unwrap());
    let rows = compare_report(&tmp.path().join("report"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[1] < 0.1));
    assert!(tmp.path().join("sde/summary.toml").exists());
}

#[test]
fn parametric_flow_matches_fd_on_double_well() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = ExperimentConfig::default_double_well();
    a.output_dir = tmp.path().join("flow");
    let mut b = a.clone();
    b.experiment = ExperimentKind::FdOracle;
    b.output_dir = tmp.path().join("fd");
    let pa = write_config(tmp.path(), "a.toml", &a);
    let pb = write_config(tmp.path(), "b.toml", &b);
    let report = tmp.path().join("report");
    assert_ok(&paramfp().arg("compare").arg(&pa).arg(&pb).arg("--output").arg(&report).output().unwrap());
    let rows = compare_report(&report);
    let terminal = rows.last().unwrap()[1];
    assert!(terminal <= 0.1, "terminal W1 {terminal}");
}
