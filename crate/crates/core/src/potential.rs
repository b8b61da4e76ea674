//! Confining potentials `V` together with the diffusion constant `β`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `V(y) = ½ (y-μ)ᵀ Σ⁻¹ (y-μ)`.
    Quadratic {
        sigma: DMatrix<f64>,
        mu: DVector<f64>,
        sigma_inv: DMatrix<f64>,
    },
    /// `V(y) = Σ_k c_k y^k` in one dimension (ascending coefficients).
    Polynomial1D { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    beta: f64,
}

impl Potential {
    pub fn quadratic(sigma: DMatrix<f64>, mu: DVector<f64>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if !sigma.is_square() || sigma.nrows() != mu.len() || mu.is_empty() {
            return Err(Error::InvalidArgument("quadratic potential shape mismatch".into()));
        }
        if (&sigma - sigma.transpose()).amax() > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::InvalidArgument("Σ must be symmetric".into()));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("Σ must be positive definite".into()))?;
        let sigma_inv = chol.inverse();
        Ok(Self { kind: PotentialKind::Quadratic { sigma, mu, sigma_inv }, beta })
    }

    /// Scalar `V(y) = (y-μ)²/(2Σ)`.
    pub fn quadratic_1d(sigma: f64, mu: f64, beta: f64) -> Result<Self> {
        Self::quadratic(DMatrix::from_element(1, 1, sigma), DVector::from_element(1, mu), beta)
    }

    pub fn polynomial(coefficients: Vec<f64>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("polynomial needs finite coefficients".into()));
        }
        Ok(Self { kind: PotentialKind::Polynomial1D { coefficients }, beta })
    }

    /// `V(x) = (x+1)²(x-1)² = x⁴ - 2x² + 1`.
    pub fn double_well(beta: f64) -> Result<Self> {
        Self::polynomial(vec![1.0, 0.0, -2.0, 0.0, 1.0], beta)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { kind: self.kind.clone(), beta })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PotentialKind::Quadratic { mu, .. } => mu.len(),
            PotentialKind::Polynomial1D { .. } => 1,
        }
    }

    /// `(V(y), ∇V(y))`.
    pub fn value_grad(&self, y: &[f64]) -> (f64, Vec<f64>) {
        match &self.kind {
            PotentialKind::Quadratic { mu, sigma_inv, .. } => {
                let r = DVector::from_column_slice(y) - mu;
                let g = sigma_inv * &r;
                (0.5 * r.dot(&g), g.as_slice().to_vec())
            }
            PotentialKind::Polynomial1D { .. } => {
                let (v, d) = self.value_grad_1d(y[0]);
                (v, vec![d])
            }
        }
    }

    /// One-dimensional `(V(y), V'(y))`; for a quadratic potential only the
    /// first coordinate is used.
    pub fn value_grad_1d(&self, y: f64) -> (f64, f64) {
        match &self.kind {
            PotentialKind::Quadratic { mu, sigma_inv, .. } => {
                let r = y - mu[0];
                let a = sigma_inv[(0, 0)];
                (0.5 * a * r * r, a * r)
            }
            PotentialKind::Polynomial1D { coefficients } => {
                // Horner for value and derivative together
                let mut v = 0.0;
                let mut d = 0.0;
                for &c in coefficients.iter().rev() {
                    d = d * y + v;
                    v = v * y + c;
                }
                (v, d)
            }
        }
    }

    pub fn value_1d(&self, y: f64) -> f64 {
        self.value_grad_1d(y).0
    }

    pub fn grad_1d(&self, y: f64) -> f64 {
        self.value_grad_1d(y).1
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("β must be finite and ≥ 0, got {beta}")))
    }
}
