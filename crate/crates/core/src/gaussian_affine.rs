//! Exact Gaussian dynamics for quadratic potentials.
//!
//! With `T(x) = Γx + b`, `p = N(0, I)` and `V(y) = ½(y−μ)ᵀΣ⁻¹(y−μ)` the
//! parametric flow closes on the affine family:
//!
//! ```text
//! Γ̇ = −Σ⁻¹Γ + βΓ⁻ᵀ,    ḃ = Σ⁻¹(μ − b)
//! ```
//!
//! and `ρ_t = N(b_t, Γ_tΓ_tᵀ)` solves the Fokker-Planck equation exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineState {
    pub gamma: DMatrix<f64>,
    pub b: DVector<f64>,
    pub t: f64,
}

impl AffineState {
    pub fn new(gamma: DMatrix<f64>, b: DVector<f64>, t: f64) -> Result<Self> {
        if !gamma.is_square() || gamma.nrows() != b.len() || b.is_empty() {
            return Err(Error::InvalidArgument("affine state shape mismatch".into()));
        }
        Ok(Self { gamma, b, t })
    }

    /// Starting state `Γ₀ = √Σ₀` (principal root), `b₀ = μ₀`.
    pub fn from_gaussian(sigma0: &DMatrix<f64>, mu0: &DVector<f64>) -> Result<Self> {
        Self::new(principal_sqrt(sigma0)?, mu0.clone(), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Principal square root of a symmetric positive definite matrix.
pub fn principal_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("matrix square root needs a square matrix".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument("covariance must be positive definite".into()));
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

fn quadratic_parts(v: &Potential) -> Result<(&DVector<f64>, &DMatrix<f64>)> {
    match v.kind() {
        PotentialKind::Quadratic { mu, sigma_inv, .. } => Ok((mu, sigma_inv)),
        _ => Err(Error::InvalidArgument("affine dynamics need a quadratic potential".into())),
    }
}

/// `(Γ̇, ḃ) = (−Σ⁻¹Γ + βΓ⁻ᵀ, Σ⁻¹(μ − b))`.
pub fn affine_rhs(state: &AffineState, v: &Potential) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (mu, sigma_inv) = quadratic_parts(v)?;
    if mu.len() != state.dim() {
        return Err(Error::InvalidArgument("potential and state dimensions differ".into()));
    }
    let d = state.dim();
    let beta = v.beta();
    let lu = state.gamma.transpose().lu();
    let det = lu.determinant();
    let scale = state.gamma.amax().powi(d as i32);
    if !(det.abs() > 1e-14 * scale) {
        return Err(Error::SingularMatrix { det });
    }
    let gamma_inv_t = lu
        .solve(&DMatrix::identity(d, d))
        .ok_or(Error::SingularMatrix { det })?;
    let dgamma = -(sigma_inv * &state.gamma) + gamma_inv_t * beta;
    let db = sigma_inv * (mu - &state.b);
    Ok((dgamma, db))
}

/// Classical RK4 from `initial` over `[0, horizon]` with `⌈horizon/dt⌉`
/// uniform steps. Returns every state, including the initial one.
pub fn integrate_affine(initial: &AffineState, v: &Potential, dt: f64, horizon: f64) -> Result<Vec<AffineState>> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and horizon ≥ 0".into()));
    }
    let det0 = initial.gamma.determinant();
    if !(det0 > 0.0) {
        return Err(Error::SingularMatrix { det: det0 });
    }
    let steps = (horizon / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    let t0 = initial.t;

    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    let mut s = initial.clone();
    for k in 0..steps {
        let at = |g: DMatrix<f64>, b: DVector<f64>| AffineState { gamma: g, b, t: 0.0 };
        let (k1g, k1b) = affine_rhs(&s, v)?;
        let (k2g, k2b) = affine_rhs(&at(&s.gamma + &k1g * (h / 2.0), &s.b + &k1b * (h / 2.0)), v)?;
        let (k3g, k3b) = affine_rhs(&at(&s.gamma + &k2g * (h / 2.0), &s.b + &k2b * (h / 2.0)), v)?;
        let (k4g, k4b) = affine_rhs(&at(&s.gamma + &k3g * h, &s.b + &k3b * h), v)?;
        let gamma = &s.gamma + (k1g + k2g * 2.0 + k3g * 2.0 + k4g) * (h / 6.0);
        let b = &s.b + (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (h / 6.0);
        let det = gamma.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularMatrix { det });
        }
        s = AffineState { gamma, b, t: t0 + (k + 1) as f64 * h };
        out.push(s.clone());
    }
    Ok(out)
}

/// `(b, ΓΓᵀ)`, the mean and covariance of `N(0, I)` pushed through the state.
pub fn gaussian_moments(state: &AffineState) -> (DVector<f64>, DMatrix<f64>) {
    (state.b.clone(), &state.gamma * state.gamma.transpose())
}

/// Closed-form `F(ρ) = E_ρ[V] + β ∫ρ log ρ` for `ρ = N(b, ΓΓᵀ)`.
pub fn gaussian_free_energy(state: &AffineState, v: &Potential) -> Result<f64> {
    let (mu, sigma_inv) = quadratic_parts(v)?;
    let (mean, cov) = gaussian_moments(state);
    let d = state.dim() as f64;
    let r = &mean - mu;
    let expected_v = 0.5 * ((sigma_inv * &cov).trace() + r.dot(&(sigma_inv * &r)));
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularMatrix { det });
    }
    let neg_entropy = -0.5 * (d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + det.ln());
    Ok(expected_v + v.beta() * neg_entropy)
}
