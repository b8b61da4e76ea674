//! Independent references for validating the parametric flow: a grid
//! Fokker-Planck solver, an Euler–Maruyama particle simulator, the Gibbs
//! density and the one-dimensional Wasserstein-1 distance.

mod fd;
mod grid;
mod sde;
mod wasserstein;

pub use fd::{fd_solve, fd_solve_snapshots, stability_bound};
pub use grid::{gibbs_density, GridDensity};
pub use sde::{sde_simulate, sde_simulate_snapshots, InitialLaw};
pub use wasserstein::{wasserstein1_1d, Law1D};
