//! Experiment configuration, stored as TOML with dotted sections.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BasisSet};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, ResampleMode};
use crate::free_energy::DualParams;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ParametricFlow,
    AffineExact,
    FdOracle,
    SdeOracle,
    Compare,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ParametricFlow => "parametric-flow",
            ExperimentKind::AffineExact => "affine-exact",
            ExperimentKind::FdOracle => "fd-oracle",
            ExperimentKind::SdeOracle => "sde-oracle",
            ExperimentKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKindSpec {
    Quadratic,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKindSpec,
    /// Ascending coefficients of a 1D polynomial potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Row-major `d×d` covariance `Σ` of a quadratic potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub m: usize,
    pub l: f64,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self { kind: BasisKind::Hat, m: 100, l: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    /// Mean `μ₀` of the Gaussian initial law.
    pub mean: Vec<f64>,
    /// Row-major covariance `Σ₀` of the Gaussian initial law.
    pub cov: Vec<f64>,
    /// Explicit starting coefficients; overrides `mean`/`cov` for the
    /// parametric flow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { mean: vec![0.0], cov: vec![1.0], theta: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleSpec {
    Frozen,
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSpec {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    pub resample: ResampleSpec,
    pub snapshot_stride: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            dt: 1e-3,
            t_final: 2.0,
            ridge: None,
            resample: ResampleSpec::Frozen,
            snapshot_stride: 100,
        }
    }
}

impl FlowSpec {
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if !(steps >= 0.0) || (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "flow.t_final ({}) must be an integer multiple of flow.dt ({})",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualSpec {
    pub knots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub uniform_weight: f64,
}

impl Default for DualSpec {
    fn default() -> Self {
        let d = DualParams::default();
        Self {
            knots: d.knots,
            half_width: d.half_width,
            tol: d.tol,
            max_iter: d.max_iter,
            uniform_weight: d.uniform_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub grid_half_width: f64,
    pub grid_nodes: usize,
    /// Largest finite-volume step; defaults to 0.9 × the stability bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_dt: Option<f64>,
    pub sde_dt: f64,
    /// Particle count for the SDE oracle; defaults to `flow.n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sde_n: Option<usize>,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { grid_half_width: 3.0, grid_nodes: 2001, fd_dt: None, sde_dt: 1e-3, sde_n: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub bins: usize,
    pub hist_min: f64,
    pub hist_max: f64,
    pub write_samples: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { bins: 80, hist_min: -3.0, hist_max: 3.0, write_samples: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub beta: f64,
    pub output_dir: PathBuf,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub dual: DualSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

impl ExperimentConfig {
    /// Double-well `V = (x+1)²(x−1)²` at `β = 1/4` from `N(0, 1)`, `T = 5`.
    pub fn default_double_well() -> Self {
        Self {
            experiment: ExperimentKind::ParametricFlow,
            seed: 42,
            beta: 0.25,
            output_dir: PathBuf::from("out/double-well"),
            potential: PotentialSpec {
                kind: PotentialKindSpec::Polynomial,
                coefficients: Some(vec![1.0, 0.0, -2.0, 0.0, 1.0]),
                sigma: None,
                mu: None,
            },
            basis: BasisSpec::default(),
            initial: InitialSpec::default(),
            flow: FlowSpec { t_final: 5.0, ..FlowSpec::default() },
            dual: DualSpec::default(),
            oracle: OracleSpec::default(),
            output: OutputSpec::default(),
            compare: None,
        }
    }

    /// One-dimensional Ornstein–Uhlenbeck setup: `Σ = 1, μ = 0, β = 1`,
    /// `ρ₀ = N(0, 4)`, affine basis `{1, x}`.
    pub fn default_ou() -> Self {
        Self {
            experiment: ExperimentKind::ParametricFlow,
            seed: 7,
            beta: 1.0,
            output_dir: PathBuf::from("out/ou"),
            potential: PotentialSpec {
                kind: PotentialKindSpec::Quadratic,
                coefficients: None,
                sigma: Some(vec![1.0]),
                mu: Some(vec![0.0]),
            },
            basis: BasisSpec { kind: BasisKind::Polynomial, m: 2, l: 4.0 },
            initial: InitialSpec { mean: vec![0.0], cov: vec![4.0], theta: None },
            flow: FlowSpec { t_final: 1.0, ..FlowSpec::default() },
            dual: DualSpec::default(),
            oracle: OracleSpec { grid_half_width: 8.0, ..OracleSpec::default() },
            output: OutputSpec { hist_min: -6.0, hist_max: 6.0, ..OutputSpec::default() },
            compare: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(cmp) = cfg.compare.as_mut() {
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [&mut cmp.a, &mut cmp.b] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(one_line(&e.to_string())))
    }

    /// Fills in every defaulted value that can be known before running.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.dual.half_width.is_none() {
            c.dual.half_width = Some(c.basis.l + 4.0);
        }
        if c.oracle.sde_n.is_none() {
            c.oracle.sde_n = Some(c.flow.n);
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be finite and ≥ 0");
        }
        if self.experiment == ExperimentKind::Compare {
            if self.compare.is_none() {
                return bad("experiment `compare` needs a [compare] section with `a` and `b`");
            }
            return Ok(());
        }
        self.potential()?;
        if self.basis.m == 0 || !(self.basis.l > 0.0) {
            return bad("basis.m must be ≥ 1 and basis.l > 0");
        }
        if !(self.flow.dt > 0.0) || !(self.flow.t_final >= 0.0) {
            return bad("flow.dt must be > 0 and flow.t_final ≥ 0");
        }
        self.flow.steps()?;
        if self.flow.n == 0 || self.flow.snapshot_stride == 0 {
            return bad("flow.n and flow.snapshot_stride must be ≥ 1");
        }
        if self.flow.ridge.is_some_and(|r| !(r >= 0.0)) {
            return bad("flow.ridge must be ≥ 0");
        }
        if self.dual.knots < 2 || !(self.dual.tol > 0.0) || self.dual.max_iter == 0 {
            return bad("dual.knots ≥ 2, dual.tol > 0 and dual.max_iter ≥ 1 are required");
        }
        if !(0.0..1.0).contains(&self.dual.uniform_weight) {
            return bad("dual.uniform_weight must lie in [0, 1)");
        }
        if self.dual.half_width.is_some_and(|l| !(l > 0.0)) {
            return bad("dual.half_width must be > 0");
        }
        if self.oracle.grid_nodes < 3 || !(self.oracle.grid_half_width > 0.0) || !(self.oracle.sde_dt > 0.0) {
            return bad("oracle grid needs ≥ 3 nodes, a positive half-width and sde_dt > 0");
        }
        if self.oracle.fd_dt.is_some_and(|d| !(d > 0.0)) || self.oracle.sde_n == Some(0) {
            return bad("oracle.fd_dt must be > 0 and oracle.sde_n ≥ 1");
        }
        if self.output.bins == 0 || !(self.output.hist_max > self.output.hist_min) {
            return bad("output.bins ≥ 1 and hist_max > hist_min are required");
        }
        let d = self.dim()?;
        if self.initial.mean.len() != d || self.initial.cov.len() != d * d {
            return bad("initial.mean / initial.cov do not match the potential dimension");
        }
        if let Some(t) = &self.initial.theta {
            if t.len() != self.basis.m {
                return bad("initial.theta must have basis.m entries");
            }
        }
        if d != 1 && self.experiment != ExperimentKind::AffineExact {
            return bad("only the affine-exact experiment supports dimension > 1");
        }
        Ok(())
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.potential()?.dim())
    }

    pub fn potential(&self) -> Result<Potential> {
        let p = &self.potential;
        match p.kind {
            PotentialKindSpec::Polynomial => {
                let c = p
                    .coefficients
                    .clone()
                    .ok_or_else(|| Error::Config("polynomial potential needs `coefficients`".into()))?;
                Potential::polynomial(c, self.beta)
            }
            PotentialKindSpec::Quadratic => {
                let mu = p.mu.clone().ok_or_else(|| Error::Config("quadratic potential needs `mu`".into()))?;
                let sigma = p
                    .sigma
                    .clone()
                    .ok_or_else(|| Error::Config("quadratic potential needs `sigma`".into()))?;
                let d = mu.len();
                if sigma.len() != d * d {
                    return Err(Error::Config("potential.sigma must have d² entries".into()));
                }
                Potential::quadratic(DMatrix::from_row_slice(d, d, &sigma), DVector::from_vec(mu), self.beta)
            }
        }
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn basis_set(&self) -> Result<BasisSet> {
        BasisSet::new(self.basis.kind, self.basis.m, self.basis.l)
    }

    pub fn dual_params(&self) -> DualParams {
        DualParams {
            knots: self.dual.knots,
            half_width: self.dual.half_width,
            tol: self.dual.tol,
            max_iter: self.dual.max_iter,
            uniform_weight: self.dual.uniform_weight,
        }
    }

    pub fn flow_config(&self) -> Result<FlowConfig> {
        Ok(FlowConfig {
            dt: self.flow.dt,
            steps: self.flow.steps()?,
            sample_count: self.flow.n,
            ridge: self.flow.ridge,
            resample: match self.flow.resample {
                ResampleSpec::Frozen => ResampleMode::Frozen,
                ResampleSpec::PerStep => ResampleMode::PerStep,
            },
            snapshot_stride: self.flow.snapshot_stride,
            seed: self.seed,
            dual: self.dual_params(),
        })
    }

    /// Snapshot steps: every `snapshot_stride` steps plus the final step.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        let steps = self.flow.steps()?;
        let stride = self.flow.snapshot_stride;
        let mut out: Vec<usize> = (0..=steps).step_by(stride).collect();
        if out.last() != Some(&steps) {
            out.push(steps);
        }
        Ok(out)
    }

    pub fn snapshot_times(&self) -> Result<Vec<f64>> {
        Ok(self.snapshot_steps()?.into_iter().map(|s| s as f64 * self.flow.dt).collect())
    }
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
