//! Parametric Fokker–Planck solver.
//!
//! The density `ρ_t` of `∂ρ/∂t = ∇·(ρ∇V) + βΔρ` is represented as the
//! pushforward `T_θ#p` of a standard Gaussian through a map that is linear
//! in `θ`. The parameters follow the natural-gradient flow
//! `θ̇ = −G(θ)⁻¹ ∇_θ F(θ)` with `G` the pulled-back Wasserstein metric and
//! `F(ρ) = E_ρ[V] + β ∫ ρ log ρ`, integrated by forward Euler.
//!
//! The [`oracle`] module holds independent reference solvers (finite
//! volumes, particles, closed forms) used to validate the parametric flow.

pub mod basis;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod free_energy;
pub mod gaussian_affine;
pub mod map;
pub mod metric;
pub mod oracle;
pub mod potential;
pub mod sampling;

pub use basis::{BasisKind, BasisSet};
pub use error::{Error, Result};
pub use flow::{euler_step, monotonicity_report, run_flow, FlowConfig, FlowRun, FlowTrajectory, ResampleMode};
pub use free_energy::{
    entropy_change_of_variables, free_energy, grad_free_energy, solve_dual_entropy, DualParams, DualPotential,
    FreeEnergyEstimate,
};
pub use gaussian_affine::{affine_rhs, integrate_affine, AffineState};
pub use map::{AffineMap, PushforwardMap1D};
pub use metric::{metric_1d, solve_regularized, MetricTensor};
pub use potential::Potential;
pub use sampling::{pushforward_samples, sample_reference, ParticleEnsemble, ReferenceMeasure};
