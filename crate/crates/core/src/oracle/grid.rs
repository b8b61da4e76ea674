use crate::error::{Error, Result};
use crate::potential::Potential;

/// Density on uniform nodes over `[-L, L]`, each node the centre of a cell
/// of width `Δx = 2L/(N−1)`. Normalized so that `Σ ρ_i Δx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    half_width: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Takes values as given; they must be nonnegative with unit cell mass.
    pub fn new(half_width: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument("grid needs ≥ 2 nodes and L > 0".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("grid density must be finite and nonnegative".into()));
        }
        let g = Self { half_width, values };
        if (g.mass() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("grid density has mass {}", g.mass())));
        }
        Ok(g)
    }

    /// Evaluates `f` at the nodes and rescales to unit mass.
    pub fn from_fn(half_width: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidArgument("grid needs ≥ 2 nodes and L > 0".into()));
        }
        let dx = 2.0 * half_width / (nodes - 1) as f64;
        let raw: Vec<f64> = (0..nodes).map(|i| f(-half_width + i as f64 * dx)).collect();
        if raw.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("density values must be finite and nonnegative".into()));
        }
        let total: f64 = raw.iter().sum::<f64>() * dx;
        if !(total > 0.0) {
            return Err(Error::Empty("grid density"));
        }
        Ok(Self { half_width, values: raw.into_iter().map(|v| v / total).collect() })
    }

    /// Gaussian `N(mean, std²)` sampled on the grid.
    pub fn gaussian(half_width: f64, nodes: usize, mean: f64, std: f64) -> Result<Self> {
        Self::from_fn(half_width, nodes, |x| (-0.5 * ((x - mean) / std).powi(2)).exp())
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn mean(&self) -> f64 {
        let dx = self.dx();
        self.values.iter().enumerate().map(|(i, v)| self.node(i) * v * dx).sum::<f64>() / self.mass()
    }

    /// Variance treating each cell as uniform (adds the `Δx²/12` cell term).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let dx = self.dx();
        let second: f64 = self.values.iter().enumerate().map(|(i, v)| (self.node(i) - m).powi(2) * v * dx).sum();
        second / self.mass() + dx * dx / 12.0
    }

    /// Probability mass of the cell-wise constant density inside `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let dx = self.dx();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let lo = (self.node(i) - 0.5 * dx).max(a);
                let hi = (self.node(i) + 0.5 * dx).min(b);
                if hi > lo {
                    v * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// `exp(−V/β)/Z` on `nodes` points over `[-L, L]`.
pub fn gibbs_density(v: &Potential, half_width: f64, nodes: usize) -> Result<GridDensity> {
    let beta = v.beta();
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("Gibbs density needs β > 0".into()));
    }
    if nodes < 2 || !(half_width > 0.0) {
        return Err(Error::InvalidArgument("grid needs ≥ 2 nodes and L > 0".into()));
    }
    let dx = 2.0 * half_width / (nodes - 1) as f64;
    let energies: Vec<f64> = (0..nodes).map(|i| v.value_1d(-half_width + i as f64 * dx)).collect();
    let floor = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - floor) / beta).exp()).collect();
    let total: f64 = weights.iter().sum::<f64>() * dx;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::GibbsUnderflow);
    }
    Ok(GridDensity { half_width, values: weights.into_iter().map(|w| w / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_gibbs_state() {
        let v = Potential::quadratic_1d(1.0, 0.0, 1.0).unwrap();
        let g = gibbs_density(&v, 8.0, 1601).unwrap();
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        for (x, p) in g.nodes().iter().zip(g.values()) {
            assert!((p - norm * (-0.5 * x * x).exp()).abs() < 1e-8);
        }
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_well_gibbs_is_symmetric_bimodal() {
        let v = Potential::double_well(0.25).unwrap();
        let g = gibbs_density(&v, 3.0, 2001).unwrap();
        let vals = g.values();
        let n = vals.len();
        for i in 0..n {
            assert!((vals[i] - vals[n - 1 - i]).abs() < 1e-12);
        }
        let argmax = (0..n).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        assert!((g.node(argmax).abs() - 1.0).abs() <= g.dx());
        assert!(vals[n / 2] < 0.05 * vals[argmax]);
    }

    #[test]
    fn constant_potential_is_uniform() {
        let v = Potential::polynomial(vec![3.0], 0.5).unwrap();
        let g = gibbs_density(&v, 2.0, 11).unwrap();
        assert!(g.values().iter().all(|&p| (p - g.values()[0]).abs() < 1e-15));
        assert!((g.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_is_rejected() {
        assert!(gibbs_density(&Potential::double_well(0.0).unwrap(), 3.0, 11).is_err());
    }

    #[test]
    fn moments_of_gaussian_grid() {
        let g = GridDensity::gaussian(20.0, 8001, 0.5, 2.0).unwrap();
        assert!((g.mean() - 0.5).abs() < 1e-9);
        assert!((g.variance() - 4.0).abs() < 1e-5);
        assert!((g.mass_between(-100.0, 100.0) - 1.0).abs() < 1e-12);
        assert!((g.mass_between(-100.0, 0.5) - 0.5).abs() < 1e-3);
    }
}
