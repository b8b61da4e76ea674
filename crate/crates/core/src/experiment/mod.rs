//! Config-driven experiment runner and comparison of runs.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use config::{
    BasisSpec, CompareSpec, DualSpec, ExperimentConfig, ExperimentKind, FlowSpec, InitialSpec, OracleSpec,
    OutputSpec, PotentialKindSpec, PotentialSpec, ResampleSpec,
};
pub use output::{density_csv, fmt_f64, samples_csv, write_atomic, Histogram, Table};

use crate::error::{Error, Result};
use crate::flow::{monotonicity_report, run_flow};
use crate::gaussian_affine::{gaussian_free_energy, gaussian_moments, integrate_affine, principal_sqrt, AffineState};
use crate::map::{AffineMap, PushforwardMap1D};
use crate::oracle::{fd_solve_snapshots, gibbs_density, sde_simulate_snapshots, stability_bound};
use crate::oracle::{wasserstein1_1d, GridDensity, InitialLaw, Law1D};
use crate::potential::{Potential, PotentialKind};
use crate::sampling::{pushforward_affine, ReferenceMeasure};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_SUMMARY_FILE: &str = "compare_summary.toml";

/// State of the law at one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotData {
    /// Row-major particles with `dim` coordinates each.
    Samples { dim: usize, points: Vec<f64> },
    Density(GridDensity),
}

impl SnapshotData {
    fn law_1d(&self) -> Option<Law1D> {
        match self {
            SnapshotData::Samples { dim: 1, points } => Some(Law1D::Samples(points.clone())),
            SnapshotData::Samples { .. } => None,
            SnapshotData::Density(g) => Some(Law1D::Grid(g.clone())),
        }
    }

    /// Mean and variance of a one-dimensional snapshot.
    pub fn moments_1d(&self) -> Option<(f64, f64)> {
        match self {
            SnapshotData::Samples { dim: 1, points } => Some(sample_moments(points)),
            SnapshotData::Samples { .. } => None,
            SnapshotData::Density(g) => Some((g.mean(), g.variance())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub step: usize,
    pub time: f64,
    pub data: SnapshotData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub experiment: ExperimentKind,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub snapshots: usize,
}

/// Contents of `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run: RunInfo,
    pub metrics: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(config::one_line(&e.to_string())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(config::one_line(&e.to_string())))
    }
}

/// Everything a run produces, before it is written to disk.
#[derive(Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub trajectory: Table,
    pub snapshots: Vec<SnapshotRecord>,
    pub metrics: BTreeMap<String, f64>,
    pub failure: Option<Error>,
}

impl RunOutput {
    pub fn summary(&self) -> Summary {
        Summary {
            run: RunInfo {
                experiment: self.config.experiment,
                status: if self.failure.is_none() { "complete" } else { "failed" }.to_string(),
                error: self.failure.as_ref().map(|e| format!("{}: {}", e.kind(), config::one_line(&e.to_string()))),
                snapshots: self.snapshots.len(),
            },
            metrics: self.metrics.clone(),
            config: self.config.clone(),
        }
    }

    pub fn final_snapshot(&self) -> Option<&SnapshotRecord> {
        self.snapshots.last()
    }
}

fn sample_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

fn initial_gaussian(cfg: &ExperimentConfig) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = cfg.initial.mean.len();
    let mean = DVector::from_column_slice(&cfg.initial.mean);
    let cov = DMatrix::from_row_slice(d, d, &cfg.initial.cov);
    Ok((mean, cov))
}

fn initial_std_1d(cfg: &ExperimentConfig) -> Result<f64> {
    let var = cfg.initial.cov[0];
    if !(var > 0.0) {
        return Err(Error::Config("initial.cov must be positive".into()));
    }
    Ok(var.sqrt())
}

/// Computes a run without touching the file system.
///
/// Solver failures inside the flow are returned in [`RunOutput::failure`]
/// alongside the partial results; configuration problems are errors.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let cfg = config.resolved();
    let mut out = match cfg.experiment {
        ExperimentKind::ParametricFlow => execute_flow(&cfg)?,
        ExperimentKind::AffineExact => execute_affine(&cfg)?,
        ExperimentKind::FdOracle => execute_fd(&cfg)?,
        ExperimentKind::SdeOracle => execute_sde(&cfg)?,
        ExperimentKind::Compare => {
            return Err(Error::Config("compare runs are executed with `compare`, not `run`".into()));
        }
    };
    terminal_metrics(&cfg, &mut out)?;
    Ok(out)
}

fn execute_flow(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let v = cfg.potential()?;
    let basis = cfg.basis_set()?;
    let map = match &cfg.initial.theta {
        Some(theta) => PushforwardMap1D::new(basis, theta.clone())?,
        None => PushforwardMap1D::affine(basis, cfg.initial.mean[0], initial_std_1d(cfg)?)?,
    };
    let run = run_flow(&map, &v, &cfg.flow_config()?)?;

    let m = map.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|k| format!("theta_{k}")));
    header.extend(["F", "cond_G", "ridge"].map(String::from));
    let mut table = Table::new(header);
    let tr = &run.trajectory;
    for k in 0..tr.len() {
        let mut row = vec![tr.times[k]];
        row.extend_from_slice(&tr.thetas[k]);
        row.extend([tr.free_energies[k], tr.metric_condition_numbers[k], tr.ridge_used[k]]);
        table.push(row);
    }

    let mut metrics = BTreeMap::new();
    if let (Some(first), Some(last)) = (tr.free_energies.first(), tr.free_energies.last()) {
        metrics.insert("initial_free_energy".into(), *first);
        metrics.insert("final_free_energy".into(), *last);
        metrics.insert("final_free_energy_std_error".into(), *tr.free_energy_std_errors.last().unwrap());
        let mono = monotonicity_report(tr);
        metrics.insert("ascent_events".into(), mono.event_count() as f64);
        if tr.len() > 1 {
            metrics.insert("max_free_energy_increase".into(), mono.max_increase);
        }
        let max_cond = tr.metric_condition_numbers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        metrics.insert("max_condition_number".into(), max_cond);
    }
    metrics.insert("steps_completed".into(), tr.len().saturating_sub(1) as f64);

    let snapshots = run
        .snapshots
        .into_iter()
        .map(|s| SnapshotRecord { step: s.step, time: s.time, data: SnapshotData::Samples { dim: 1, points: s.samples } })
        .collect();
    Ok(RunOutput { config: cfg.clone(), trajectory: table, snapshots, metrics, failure: run.failure })
}

fn execute_affine(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let v = cfg.potential()?;
    if !matches!(v.kind(), PotentialKind::Quadratic { .. }) {
        return Err(Error::Config("affine-exact needs a quadratic potential".into()));
    }
    let d = v.dim();
    let (mean, cov) = initial_gaussian(cfg)?;
    let init = AffineState::from_gaussian(&cov, &mean)?;
    let states = integrate_affine(&init, &v, cfg.flow.dt, cfg.flow.t_final)?;

    let mut header = vec!["t".to_string()];
    for i in 1..=d {
        for j in 1..=d {
            header.push(format!("gamma_{i}_{j}"));
        }
    }
    header.extend((1..=d).map(|i| format!("b_{i}")));
    header.push("F".into());
    let mut table = Table::new(header);
    for s in &states {
        let mut row = vec![s.t];
        for i in 0..d {
            for j in 0..d {
                row.push(s.gamma[(i, j)]);
            }
        }
        row.extend(s.b.iter().copied());
        row.push(gaussian_free_energy(s, &v)?);
        table.push(row);
    }

    let reference = ReferenceMeasure::new(d, cfg.seed).sample(cfg.flow.n)?;
    let mut snapshots = Vec::new();
    for step in cfg.snapshot_steps()? {
        let s = states.get(step).ok_or_else(|| Error::InvalidArgument("affine step grid mismatch".into()))?;
        let map = AffineMap::new(s.gamma.clone(), s.b.clone())?;
        let pts = pushforward_affine(&map, &reference)?;
        snapshots.push(SnapshotRecord {
            step,
            time: step as f64 * cfg.flow.dt,
            data: SnapshotData::Samples { dim: d, points: pts.into_points() },
        });
    }

    let mut metrics = BTreeMap::new();
    let last = states.last().expect("at least the initial state");
    let (m, c) = gaussian_moments(last);
    if d == 1 {
        metrics.insert("exact_mean".into(), m[0]);
        metrics.insert("exact_variance".into(), c[(0, 0)]);
    }
    metrics.insert("final_free_energy".into(), gaussian_free_energy(last, &v)?);
    Ok(RunOutput { config: cfg.clone(), trajectory: table, snapshots, metrics, failure: None })
}

fn execute_fd(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let v = cfg.potential()?;
    let rho0 = GridDensity::gaussian(
        cfg.oracle.grid_half_width,
        cfg.oracle.grid_nodes,
        cfg.initial.mean[0],
        initial_std_1d(cfg)?,
    )?;
    let dt = cfg.oracle.fd_dt.unwrap_or_else(|| 0.9 * stability_bound(&rho0, &v));
    let steps = cfg.snapshot_steps()?;
    let times = cfg.snapshot_times()?;
    let dens = fd_solve_snapshots(&rho0, &v, dt, &times)?;

    let mut table = Table::new(["t", "mean", "variance", "mass"].map(String::from).to_vec());
    let mut snapshots = Vec::new();
    for ((step, t), g) in steps.into_iter().zip(times).zip(dens) {
        table.push(vec![t, g.mean(), g.variance(), g.mass()]);
        snapshots.push(SnapshotRecord { step, time: t, data: SnapshotData::Density(g) });
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("fd_dt".into(), dt);
    Ok(RunOutput { config: cfg.clone(), trajectory: table, snapshots, metrics, failure: None })
}

fn execute_sde(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let v = cfg.potential()?;
    let init = InitialLaw::normal_1d(cfg.initial.mean[0], initial_std_1d(cfg)?);
    let n = cfg.oracle.sde_n.unwrap_or(cfg.flow.n);
    let steps = cfg.snapshot_steps()?;
    let times = cfg.snapshot_times()?;
    let ens = sde_simulate_snapshots(n, &v, &init, cfg.oracle.sde_dt, &times, cfg.seed)?;

    let mut table = Table::new(["t", "mean", "variance"].map(String::from).to_vec());
    let mut snapshots = Vec::new();
    for ((step, t), e) in steps.into_iter().zip(times).zip(ens) {
        let pts = e.into_points();
        let (m, var) = sample_moments(&pts);
        table.push(vec![t, m, var]);
        snapshots.push(SnapshotRecord { step, time: t, data: SnapshotData::Samples { dim: 1, points: pts } });
    }
    Ok(RunOutput { config: cfg.clone(), trajectory: table, snapshots, metrics: BTreeMap::new(), failure: None })
}

/// Exact law at the final snapshot time when the potential is quadratic and
/// the initial law Gaussian.
fn exact_ou_moments(cfg: &ExperimentConfig, v: &Potential, time: f64) -> Result<Option<(f64, f64)>> {
    if !matches!(v.kind(), PotentialKind::Quadratic { .. }) || v.dim() != 1 {
        return Ok(None);
    }
    if cfg.experiment == ExperimentKind::ParametricFlow && cfg.initial.theta.is_some() {
        return Ok(None);
    }
    let (mean, cov) = initial_gaussian(cfg)?;
    let init = AffineState::new(principal_sqrt(&cov)?, mean, 0.0)?;
    let states = integrate_affine(&init, v, cfg.flow.dt, time)?;
    let (m, c) = gaussian_moments(states.last().expect("initial state"));
    Ok(Some((m[0], c[(0, 0)])))
}

fn terminal_metrics(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let Some(last) = out.snapshots.last() else { return Ok(()) };
    out.metrics.insert("final_time".into(), last.time);
    let Some((mut mean, mut var)) = last.data.moments_1d() else { return Ok(()) };
    // the affine run knows its law exactly; samples only illustrate it
    if let (Some(&m), Some(&v)) = (out.metrics.get("exact_mean"), out.metrics.get("exact_variance")) {
        out.metrics.insert("sample_mean".into(), mean);
        out.metrics.insert("sample_variance".into(), var);
        (mean, var) = (m, v);
    }
    out.metrics.insert("mean".into(), mean);
    out.metrics.insert("variance".into(), var);

    let v = cfg.potential()?;
    if v.beta() > 0.0 {
        match gibbs_density(&v, cfg.oracle.grid_half_width, cfg.oracle.grid_nodes) {
            Ok(g) => {
                let law = last.data.law_1d().expect("one-dimensional snapshot");
                out.metrics.insert("w1_to_gibbs".into(), wasserstein1_1d(&law, &Law1D::Grid(g))?);
            }
            Err(e) => warn!("no gibbs reference: {e}"),
        }
    }
    if let Some((em, ev)) = exact_ou_moments(cfg, &v, last.time)? {
        out.metrics.insert("mean_error".into(), mean - em);
        out.metrics.insert("variance_relative_error".into(), (var - ev) / ev);
    }
    Ok(())
}

fn snapshot_name(prefix: &str, step: usize) -> String {
    format!("{prefix}_{step:07}.csv")
}

/// Writes the trajectory table, snapshot files and `summary.toml` into
/// `config.output_dir`.
pub fn write_artifacts(out: &RunOutput) -> Result<()> {
    let dir = &out.config.output_dir;
    write_atomic(&dir.join(TRAJECTORY_FILE), out.trajectory.to_csv().as_bytes())?;
    let snap_dir = dir.join(SNAPSHOT_DIR);
    let o = &out.config.output;
    for s in &out.snapshots {
        match &s.data {
            SnapshotData::Samples { dim, points } => {
                if o.write_samples {
                    write_atomic(&snap_dir.join(snapshot_name("samples", s.step)), samples_csv(*dim, points).as_bytes())?;
                }
                if *dim == 1 {
                    let h = Histogram::from_samples(points, o.bins, o.hist_min, o.hist_max);
                    write_atomic(&snap_dir.join(snapshot_name("hist", s.step)), h.to_csv().as_bytes())?;
                }
            }
            SnapshotData::Density(g) => {
                write_atomic(&snap_dir.join(snapshot_name("density", s.step)), density_csv(g).as_bytes())?;
                let h = Histogram::from_density(g, o.bins, o.hist_min, o.hist_max);
                write_atomic(&snap_dir.join(snapshot_name("hist", s.step)), h.to_csv().as_bytes())?;
            }
        }
    }
    write_atomic(&dir.join(SUMMARY_FILE), out.summary().to_toml_string()?.as_bytes())?;
    Ok(())
}

/// Executes a run and writes its artifacts. A solver failure is reported as
/// an error after the partial artifacts are written.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = execute(config)?;
    info!("writing artifacts to {}", out.config.output_dir.display());
    write_artifacts(&out)?;
    match out.failure.take() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Time-aligned distances between two runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub table: Table,
    pub max_w1: f64,
    pub terminal_w1: f64,
    pub max_abs_mean_diff: f64,
    pub max_abs_variance_diff: f64,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    comparison: BTreeMap<&'static str, f64>,
    a: &'a ExperimentConfig,
    b: &'a ExperimentConfig,
}

/// Runs the two configs named in a `compare` experiment.
pub fn compare_from_config(config: &ExperimentConfig) -> Result<CompareReport> {
    let spec = config
        .compare
        .as_ref()
        .ok_or_else(|| Error::Config("missing [compare] section".into()))?;
    let a = ExperimentConfig::load(&spec.a)?;
    let b = ExperimentConfig::load(&spec.b)?;
    compare(&a, &b, &config.output_dir)
}

/// Compares the snapshots of two executed runs.
pub fn compare_outputs(a: &RunOutput, b: &RunOutput) -> Result<CompareReport> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::TimeGridMismatch(format!(
            "{} snapshots versus {}",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    if a.snapshots.is_empty() {
        return Err(Error::Empty("compare"));
    }
    let mut table = Table::new(
        ["t", "w1", "mean_a", "mean_b", "mean_diff", "variance_a", "variance_b", "variance_diff"]
            .map(String::from)
            .to_vec(),
    );
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.time - sb.time).abs() > 1e-9 * sa.time.abs().max(1.0) {
            return Err(Error::TimeGridMismatch(format!("t = {} versus t = {}", sa.time, sb.time)));
        }
        let (Some(la), Some(lb)) = (sa.data.law_1d(), sb.data.law_1d()) else {
            return Err(Error::InvalidArgument("compare needs one-dimensional runs".into()));
        };
        let w1 = wasserstein1_1d(&la, &lb)?;
        let (ma, va) = sa.data.moments_1d().expect("one-dimensional");
        let (mb, vb) = sb.data.moments_1d().expect("one-dimensional");
        table.push(vec![sa.time, w1, ma, mb, ma - mb, va, vb, va - vb]);
    }
    let col_max = |name: &str| table.column(name).unwrap().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let w1s = table.column("w1").unwrap();
    Ok(CompareReport {
        max_w1: col_max("w1"),
        terminal_w1: *w1s.last().unwrap(),
        max_abs_mean_diff: col_max("mean_diff"),
        max_abs_variance_diff: col_max("variance_diff"),
        table,
    })
}

/// Runs both configs (writing their artifacts) and writes `compare.csv`
/// and `compare_summary.toml` into `output_dir`.
pub fn compare(a: &ExperimentConfig, b: &ExperimentConfig, output_dir: &Path) -> Result<CompareReport> {
    let ra = run(a)?;
    let rb = if a == b { None } else { Some(run(b)?) };
    let rb_ref = rb.as_ref().unwrap_or(&ra);
    let report = compare_outputs(&ra, rb_ref)?;
    write_atomic(&output_dir.join(COMPARE_FILE), report.table.to_csv().as_bytes())?;
    let mut comparison = BTreeMap::new();
    comparison.insert("max_w1", report.max_w1);
    comparison.insert("terminal_w1", report.terminal_w1);
    comparison.insert("max_abs_mean_diff", report.max_abs_mean_diff);
    comparison.insert("max_abs_variance_diff", report.max_abs_variance_diff);
    let summary = CompareSummary { comparison, a: &ra.config, b: &rb_ref.config };
    let text = toml::to_string(&summary).map_err(|e| Error::Config(config::one_line(&e.to_string())))?;
    write_atomic(&output_dir.join(COMPARE_SUMMARY_FILE), text.as_bytes())?;
    Ok(report)
}

/// Default output location of `compare a b` when no directory is given.
pub fn default_compare_dir(a: &ExperimentConfig) -> PathBuf {
    a.output_dir.join("compare")
}
