//! Forward-Euler integration of `θ̇ = −G(θ)⁻¹ ∇_θF(θ)`.

use log::debug;

use crate::error::{Error, Result};
use crate::free_energy::{free_energy, grad_free_energy, DualParams, DualPotential, FreeEnergyEstimate};
use crate::map::PushforwardMap1D;
use crate::metric::{metric_1d, FactoredMetric};
use crate::potential::Potential;
use crate::sampling::{pushforward_samples, ParticleEnsemble, ReferenceMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// One reference ensemble for the whole run (common random numbers).
    Frozen,
    /// Fresh reference draw at every step.
    PerStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    pub steps: usize,
    pub sample_count: usize,
    /// `None` selects `10⁻⁸·trace(G)/m`.
    pub ridge: Option<f64>,
    pub resample: ResampleMode,
    pub snapshot_stride: usize,
    pub seed: u64,
    pub dual: DualParams,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 1000,
            sample_count: 10_000,
            ridge: None,
            resample: ResampleMode::Frozen,
            snapshot_stride: 100,
            seed: 0,
            dual: DualParams::default(),
        }
    }
}

impl FlowConfig {
    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot stride must be positive".into()));
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0) {
                return Err(Error::InvalidArgument("ridge must be ≥ 0".into()));
            }
        }
        Ok(())
    }

    fn reference(&self) -> ReferenceMeasure {
        ReferenceMeasure::new(1, self.seed)
    }

    fn ensemble_for_step(&self, step: usize) -> Result<ParticleEnsemble> {
        let epoch = match self.resample {
            ResampleMode::Frozen => 0,
            ResampleMode::PerStep => step as u32,
        };
        self.reference().with_epoch(epoch).sample(self.sample_count)
    }
}

/// Per-node record of a flow run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub free_energies: Vec<f64>,
    pub free_energy_std_errors: Vec<f64>,
    pub metric_condition_numbers: Vec<f64>,
    pub ridge_used: Vec<f64>,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Pushforward samples at one time node.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug)]
pub struct FlowRun {
    pub trajectory: FlowTrajectory,
    pub snapshots: Vec<Snapshot>,
    pub final_map: PushforwardMap1D,
    /// Cause of an early stop; the trajectory then holds the nodes reached.
    pub failure: Option<Error>,
}

impl FlowRun {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Free energy, gradient and factored metric at one parameter value.
struct NodeEval {
    energy: FreeEnergyEstimate,
    grad: Vec<f64>,
}

fn evaluate(
    map: &PushforwardMap1D,
    ensemble: &ParticleEnsemble,
    v: &Potential,
    dual: &DualParams,
    warm: Option<&DualPotential>,
) -> Result<NodeEval> {
    let energy = free_energy(map, ensemble, v, dual, warm)?;
    let grad = grad_free_energy(map, ensemble, v, &energy.witness)?;
    Ok(NodeEval { energy, grad })
}

fn factor_metric(map: &PushforwardMap1D, ensemble: &ParticleEnsemble, ridge: Option<f64>) -> Result<FactoredMetric> {
    let g = metric_1d(map, ensemble)?;
    let eps = ridge.unwrap_or_else(|| g.default_ridge());
    g.factor(eps)
}

fn advance(theta: &[f64], velocity: &[f64], dt: f64) -> Result<Vec<f64>> {
    let next: Vec<f64> = theta.iter().zip(velocity).map(|(t, u)| t - dt * u).collect();
    if next.iter().all(|t| t.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFinite("flow parameters".into()))
    }
}

/// One forward-Euler step `θ' = θ − dt (G + εI)⁻¹ ∇_θF(θ)`.
pub fn euler_step(
    map: &PushforwardMap1D,
    ensemble: &ParticleEnsemble,
    v: &Potential,
    config: &FlowConfig,
) -> Result<PushforwardMap1D> {
    config.validate()?;
    let node = evaluate(map, ensemble, v, &config.dual, None)?;
    let metric = factor_metric(map, ensemble, config.ridge)?;
    let velocity = metric.solve(&node.grad);
    map.with_theta(advance(map.theta(), &velocity, config.dt)?)
}

/// Integrates the flow for `config.steps` steps from `initial`.
///
/// Step failures stop the run and are reported in [`FlowRun::failure`]
/// together with every node completed before the failure.
pub fn run_flow(initial: &PushforwardMap1D, v: &Potential, config: &FlowConfig) -> Result<FlowRun> {
    config.validate()?;
    let mut traj = FlowTrajectory::default();
    let mut snapshots = Vec::new();
    let mut map = initial.clone();
    let mut warm: Option<DualPotential> = None;
    let mut failure = None;

    // metric of a θ-linear map only depends on the ensemble
    let setup = |step: usize, map: &PushforwardMap1D| -> Result<(ParticleEnsemble, FactoredMetric, f64)> {
        let e = config.ensemble_for_step(step)?;
        let m = factor_metric(map, &e, config.ridge)?;
        let c = m.condition_number();
        Ok((e, m, c))
    };
    let frozen = match config.resample {
        ResampleMode::Frozen => match setup(0, &map) {
            Ok(f) => Some(f),
            Err(e) => {
                return Ok(FlowRun { trajectory: traj, snapshots, final_map: map, failure: Some(e) });
            }
        },
        ResampleMode::PerStep => None,
    };

    for step in 0..=config.steps {
        let time = step as f64 * config.dt;
        let fresh;
        let (ensemble, metric, cond) = match &frozen {
            Some((e, m, c)) => (e, m, *c),
            None => match setup(step, &map) {
                Ok(f) => {
                    fresh = f;
                    (&fresh.0, &fresh.1, fresh.2)
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            },
        };
        let eval = match evaluate(&map, ensemble, v, &config.dual, warm.as_ref()) {
            Ok(n) => n,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };

        traj.times.push(time);
        traj.thetas.push(map.theta().to_vec());
        traj.free_energies.push(eval.energy.value);
        traj.free_energy_std_errors.push(eval.energy.std_error);
        traj.metric_condition_numbers.push(cond);
        traj.ridge_used.push(metric.ridge());

        if step % config.snapshot_stride == 0 || step == config.steps {
            match pushforward_samples(&map, ensemble) {
                Ok(s) => snapshots.push(Snapshot { step, time, samples: s.into_points() }),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        if step == config.steps {
            break;
        }

        debug!("step {step}: F = {:.6}, dual iterations {}", eval.energy.value, eval.energy.dual_iterations);
        let velocity = metric.solve(&eval.grad);
        match advance(map.theta(), &velocity, config.dt).and_then(|t| map.with_theta(t)) {
            Ok(next) => map = next,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        warm = Some(eval.energy.witness);
    }

    Ok(FlowRun { trajectory: traj, snapshots, final_map: map, failure })
}

/// Free-energy increases beyond Monte-Carlo noise along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Node indices `k` with `F_{k+1} > F_k + slack_k`.
    pub ascent_events: Vec<usize>,
    /// Largest `F_{k+1} − F_k` observed.
    pub max_increase: f64,
}

impl MonotonicityReport {
    pub fn event_count(&self) -> usize {
        self.ascent_events.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.ascent_events.is_empty()
    }
}

/// Counts steps where `F` rises by more than three Monte-Carlo standard
/// errors (the larger of the two nodes' errors).
pub fn monotonicity_report(traj: &FlowTrajectory) -> MonotonicityReport {
    let f = &traj.free_energies;
    let se = &traj.free_energy_std_errors;
    let mut events = Vec::new();
    let mut max_increase = f64::NEG_INFINITY;
    for k in 1..f.len() {
        let rise = f[k] - f[k - 1];
        max_increase = max_increase.max(rise);
        let slack = 3.0 * se[k].max(se[k - 1]);
        if !(rise <= slack) {
            events.push(k - 1);
        }
    }
    MonotonicityReport { ascent_events: events, max_increase }
}
