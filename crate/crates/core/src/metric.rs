//! Pullback of the Wasserstein metric to the coefficients of a 1D map.
//!
//! For `T_θ = Σ θ_k φ_k` the metric reduces to the moment matrix
//! `G_ij = E_p[φ_i(X) φ_j(X)]`, estimated on reference samples. It does not
//! depend on θ.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::map::PushforwardMap1D;
use crate::sampling::{chunked_reduce, ParticleEnsemble, Provenance};

/// Number of ×10 ridge escalations attempted before giving up.
pub const RIDGE_ESCALATIONS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    entries: DMatrix<f64>,
    sample_count: usize,
}

impl MetricTensor {
    /// Wraps a symmetric matrix (e.g. an exact moment matrix).
    pub fn from_matrix(entries: DMatrix<f64>, sample_count: usize) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidArgument("metric must be a non-empty square matrix".into()));
        }
        if entries != entries.transpose() {
            return Err(Error::InvalidArgument("metric must be symmetric".into()));
        }
        Ok(Self { entries, sample_count })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `10⁻⁸ · trace(G) / m`.
    pub fn default_ridge(&self) -> f64 {
        1e-8 * self.entries.trace() / self.dim() as f64
    }

    /// Cholesky factorization of `G + εI`, escalating ε by ×10 on failure.
    pub fn factor(&self, ridge: f64) -> Result<FactoredMetric> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidArgument(format!("ridge must be ≥ 0, got {ridge}")));
        }
        let mut eps = ridge;
        for _ in 0..=RIDGE_ESCALATIONS {
            let mut a = self.entries.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += eps;
            }
            if let Some(chol) = a.cholesky() {
                let diag = chol.l_dirty().diagonal();
                if diag.iter().all(|d| *d > 0.0 && d.is_finite()) {
                    return Ok(FactoredMetric { chol, ridge: eps });
                }
            }
            eps *= 10.0;
        }
        Err(Error::SingularMetric { ridge: eps / 10.0 })
    }

    /// `ξᵀ G ξ`.
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let v = DVector::from_column_slice(xi);
        v.dot(&(&self.entries * &v))
    }
}

/// `G + εI` in factored form.
#[derive(Debug, Clone)]
pub struct FactoredMetric {
    chol: Cholesky<f64, Dyn>,
    ridge: f64,
}

impl FactoredMetric {
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(g)).as_slice().to_vec()
    }

    /// Spectral condition number of the regularized matrix.
    pub fn condition_number(&self) -> f64 {
        let l = self.chol.l();
        let ev = (&l * l.transpose()).symmetric_eigenvalues();
        let max = ev.max();
        let min = ev.min();
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }
}

/// Solution of `(G + εI) u = g` with the ridge actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub u: Vec<f64>,
    pub ridge: f64,
}

pub fn solve_regularized(g_mat: &MetricTensor, g: &[f64], ridge: f64) -> Result<RidgeSolution> {
    if g.len() != g_mat.dim() {
        return Err(Error::InvalidArgument("right-hand side length mismatch".into()));
    }
    let f = g_mat.factor(ridge)?;
    Ok(RidgeSolution { u: f.solve(g), ridge: f.ridge() })
}

/// Monte-Carlo moment matrix `G_ij = (1/n) Σ_s φ_i(X_s) φ_j(X_s)`.
pub fn metric_1d(map: &PushforwardMap1D, ensemble: &ParticleEnsemble) -> Result<MetricTensor> {
    if ensemble.provenance() != Provenance::Reference || ensemble.dim() != 1 {
        return Err(Error::InvalidArgument("metric needs 1D reference samples".into()));
    }
    let basis = map.basis();
    let m = basis.len();
    let xs = ensemble.as_slice();
    let n = xs.len();

    // upper triangle, row-major packed into an m×m buffer
    let upper = chunked_reduce(
        n,
        vec![0.0; m * m],
        |range| {
            let mut acc = vec![0.0; m * m];
            if basis.kind() == BasisKind::Hat {
                for &x in &xs[range] {
                    if let Some((k, w)) = basis.hat_cell(x) {
                        let a = 1.0 - w;
                        acc[k * m + k] += a * a;
                        if k + 1 < m {
                            acc[k * m + k + 1] += a * w;
                            acc[(k + 1) * m + k + 1] += w * w;
                        }
                    }
                }
            } else {
                let mut phi = vec![0.0; m];
                for &x in &xs[range] {
                    basis.eval_into(x, &mut phi);
                    for i in 0..m {
                        for j in i..m {
                            acc[i * m + j] += phi[i] * phi[j];
                        }
                    }
                }
            }
            acc
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, p)| *a += p),
    );

    let inv_n = 1.0 / n as f64;
    let entries = DMatrix::from_fn(m, m, |i, j| {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        upper[r * m + c] * inv_n
    });
    Ok(MetricTensor { entries, sample_count: n })
}
