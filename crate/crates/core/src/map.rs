//! Parameterized pushforward maps.

use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisKind, BasisSet};
use crate::error::{Error, Result};

/// `T_θ(x) = Σ_k θ_k φ_k(x)` over a one-dimensional basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PushforwardMap1D {
    basis: BasisSet,
    theta: Vec<f64>,
}

impl PushforwardMap1D {
    pub fn new(basis: BasisSet, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, basis has {}",
                theta.len(),
                basis.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("map coefficients".into()));
        }
        Ok(Self { basis, theta })
    }

    /// The affine map `shift + scale·x` expressed in `basis`.
    pub fn affine(basis: BasisSet, shift: f64, scale: f64) -> Result<Self> {
        let theta = basis.affine_coefficients(shift, scale).ok_or_else(|| {
            Error::InvalidArgument("affine map is not representable in this basis".into())
        })?;
        Self::new(basis, theta)
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.basis.clone(), theta)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.basis.kind() == BasisKind::Hat {
            // two nonzero hats at most
            return match self.basis.hat_cell(x) {
                Some((k, w)) => (1.0 - w) * self.theta[k] + w * self.theta.get(k + 1).copied().unwrap_or(0.0),
                None => 0.0,
            };
        }
        let mut phi = vec![0.0; self.dim()];
        self.basis.eval_into(x, &mut phi);
        dot(&phi, &self.theta)
    }

    /// `∂T_θ(x)/∂θ = (φ_1(x), ..., φ_m(x))`, independent of θ.
    pub fn grad_theta(&self, x: f64) -> Vec<f64> {
        self.basis.eval(x)
    }

    /// Spatial derivative `T_θ'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let mut dphi = vec![0.0; self.dim()];
        self.basis.derivative_into(x, &mut dphi);
        dot(&dphi, &self.theta)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `T(x) = Γx + b` with `det Γ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    gamma: DMatrix<f64>,
    shift: DVector<f64>,
}

impl AffineMap {
    pub fn new(gamma: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if !gamma.is_square() || gamma.nrows() != shift.len() {
            return Err(Error::InvalidArgument(format!(
                "affine map shape mismatch: Γ is {}x{}, b has {}",
                gamma.nrows(),
                gamma.ncols(),
                shift.len()
            )));
        }
        let det = gamma.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularMatrix { det });
        }
        Ok(Self { gamma, shift })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        (&self.gamma * x + &self.shift).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;
    use proptest::prelude::*;

    fn poly(m: usize) -> BasisSet {
        BasisSet::new(BasisKind::Polynomial, m, 1.0).unwrap()
    }

    fn hat3() -> BasisSet {
        BasisSet::new(BasisKind::Hat, 3, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let id = PushforwardMap1D::new(poly(2), vec![0.0, 1.0]).unwrap();
        assert_eq!(id.eval(3.7), 3.7);
        let c = PushforwardMap1D::new(poly(2), vec![2.0, 0.0]).unwrap();
        assert_eq!(c.eval(-5.0), 2.0);
        let peak = PushforwardMap1D::new(hat3(), vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(peak.eval(0.0), 1.0);
    }

    #[test]
    fn grad_theta_examples() {
        let id = PushforwardMap1D::new(poly(2), vec![0.0, 1.0]).unwrap();
        assert_eq!(id.grad_theta(2.0), vec![1.0, 2.0]);
        let s = BasisSet::new(BasisKind::Sinusoidal, 3, 1.0).unwrap();
        let m = PushforwardMap1D::new(s, vec![0.0; 3]).unwrap();
        assert_eq!(m.grad_theta(0.0), vec![1.0, 0.0, 0.0]);
        let h = PushforwardMap1D::new(hat3(), vec![0.0; 3]).unwrap();
        assert_eq!(h.grad_theta(0.5), vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn hat_identity_is_exact_on_support() {
        let b = BasisSet::new(BasisKind::Hat, 9, 2.0).unwrap();
        let id = PushforwardMap1D::affine(b, 0.0, 1.0).unwrap();
        for &x in &[-2.0, -1.3, 0.0, 0.77, 2.0] {
            assert!((id.eval(x) - x).abs() < 1e-14);
        }
        assert_eq!(id.eval(2.5), 0.0);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(PushforwardMap1D::new(poly(2), vec![1.0]).is_err());
    }

    #[test]
    fn affine_map_requires_positive_det() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(AffineMap::new(g, DVector::zeros(2)).is_err());
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let a = AffineMap::new(g, DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(a.apply(&[1.0, 1.0]), vec![3.0, 1.0]);
    }

    fn any_basis() -> impl Strategy<Value = BasisSet> {
        (
            prop_oneof![
                Just(BasisKind::Sinusoidal),
                Just(BasisKind::Hat),
                Just(BasisKind::Polynomial)
            ],
            2usize..8,
            0.5f64..4.0,
        )
            .prop_map(|(k, m, l)| BasisSet::new(k, m, l).unwrap())
    }

    proptest! {
        #[test]
        fn linear_in_theta(
            basis in any_basis(),
            seed in prop::collection::vec(-3.0f64..3.0, 16),
            x in -5.0f64..5.0,
        ) {
            let m = basis.len();
            let a = PushforwardMap1D::new(basis.clone(), seed[..m].to_vec()).unwrap();
            let b = PushforwardMap1D::new(basis.clone(), seed[8..8 + m].to_vec()).unwrap();
            let sum: Vec<f64> = a.theta().iter().zip(b.theta()).map(|(p, q)| p + q).collect();
            let ab = PushforwardMap1D::new(basis, sum).unwrap();
            let lhs = ab.eval(x);
            let rhs = a.eval(x) + b.eval(x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn finite_difference_in_theta_is_basis_value(
            basis in any_basis(),
            seed in prop::collection::vec(-3.0f64..3.0, 8),
            x in -5.0f64..5.0,
        ) {
            let m = basis.len();
            let map = PushforwardMap1D::new(basis, seed[..m].to_vec()).unwrap();
            let grad = map.grad_theta(x);
            let eps = 1.0;
            for k in 0..m {
                let mut t = map.theta().to_vec();
                t[k] += eps;
                let fd = (map.with_theta(t).unwrap().eval(x) - map.eval(x)) / eps;
                prop_assert!((fd - grad[k]).abs() <= 1e-12 * (1.0 + grad[k].abs() + map.eval(x).abs()));
            }
        }
    }
}
