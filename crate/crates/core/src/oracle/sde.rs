//! Euler–Maruyama particles for `dX = −∇V(X) dt + √(2β) dB`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::sampling::{stream_rng, ParticleEnsemble, Provenance, StreamPurpose};

/// Law of `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// `X_0 = mean + factor·ξ` with `ξ ~ N(0, I)`; `factor` is row-major `d×d`.
    Gaussian { mean: Vec<f64>, factor: Vec<f64> },
    /// Fixed starting points (row-major, `d` per particle), cycled if fewer
    /// than the requested particle count.
    Points { dim: usize, points: Vec<f64> },
}

impl InitialLaw {
    pub fn normal_1d(mean: f64, std: f64) -> Self {
        InitialLaw::Gaussian { mean: vec![mean], factor: vec![std] }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Gaussian { mean, .. } => mean.len(),
            InitialLaw::Points { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Gaussian { mean, factor } => {
                if mean.is_empty() || factor.len() != mean.len() * mean.len() {
                    return Err(Error::InvalidArgument("gaussian initial law shape mismatch".into()));
                }
            }
            InitialLaw::Points { dim, points } => {
                if *dim == 0 || points.is_empty() || points.len() % dim != 0 {
                    return Err(Error::Empty("initial points"));
                }
            }
        }
        Ok(())
    }
}

/// Simulates `n` particles and records the ensemble at each of `times`
/// (nondecreasing, ≥ 0). Particle `i` draws its start and its increments
/// from its own random streams, so results do not depend on threading.
pub fn sde_simulate_snapshots(
    n: usize,
    v: &Potential,
    init: &InitialLaw,
    dt: f64,
    times: &[f64],
    seed: u64,
) -> Result<Vec<ParticleEnsemble>> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle count must be positive".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("snapshot times must be nondecreasing and ≥ 0".into()));
    }
    init.validate()?;
    let d = init.dim();
    if d != v.dim() {
        return Err(Error::InvalidArgument("initial law and potential dimensions differ".into()));
    }

    // uniform steps inside every interval between snapshot times
    let mut plan = Vec::with_capacity(times.len());
    let mut now = 0.0;
    for &t in times {
        let span = t - now;
        let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
        plan.push((steps, if steps > 0 { span / steps as f64 } else { 0.0 }));
        now = t;
    }
    let noise_scale = (2.0 * v.beta()).sqrt();

    let paths: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; d];
            match init {
                InitialLaw::Gaussian { mean, factor } => {
                    let mut rng = stream_rng(seed, StreamPurpose::SdeInitial, i as u64);
                    let xi: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    for r in 0..d {
                        x[r] = mean[r] + (0..d).map(|c| factor[r * d + c] * xi[c]).sum::<f64>();
                    }
                }
                InitialLaw::Points { points, .. } => {
                    let k = i % (points.len() / d);
                    x.copy_from_slice(&points[k * d..(k + 1) * d]);
                }
            }
            let mut rng = stream_rng(seed, StreamPurpose::SdeNoise, i as u64);
            let mut record = Vec::with_capacity(times.len() * d);
            for &(steps, h) in &plan {
                let sigma = noise_scale * h.sqrt();
                for _ in 0..steps {
                    if d == 1 {
                        let drift = v.grad_1d(x[0]);
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x[0] += -drift * h + sigma * z;
                    } else {
                        let (_, g) = v.value_grad(&x);
                        for (xr, gr) in x.iter_mut().zip(g) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *xr += -gr * h + sigma * z;
                        }
                    }
                }
                record.extend_from_slice(&x);
            }
            record
        })
        .collect();

    (0..times.len())
        .map(|s| {
            let pts: Vec<f64> = paths.iter().flat_map(|p| p[s * d..(s + 1) * d].iter().copied()).collect();
            ParticleEnsemble::new(d, pts, Provenance::Sde)
        })
        .collect()
}

pub fn sde_simulate(
    n: usize,
    v: &Potential,
    init: &InitialLaw,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<ParticleEnsemble> {
    Ok(sde_simulate_snapshots(n, v, init, dt, &[horizon], seed)?.pop().expect("one snapshot"))
}
