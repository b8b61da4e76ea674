//! `W1(a, b) = ∫ |F_a(x) − F_b(x)| dx` between one-dimensional laws.

use super::grid::GridDensity;
use crate::error::{Error, Result};

/// A one-dimensional law with a piecewise-linear CDF (possibly with jumps).
#[derive(Debug, Clone, PartialEq)]
pub enum Law1D {
    /// Empirical law of the given points.
    Samples(Vec<f64>),
    /// Cell-wise constant density.
    Grid(GridDensity),
}

impl From<GridDensity> for Law1D {
    fn from(g: GridDensity) -> Self {
        Law1D::Grid(g)
    }
}

impl From<Vec<f64>> for Law1D {
    fn from(s: Vec<f64>) -> Self {
        Law1D::Samples(s)
    }
}

/// Breakpoints `x_k` with CDF left/right limits; linear in between.
struct Cdf {
    xs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Cdf {
    fn build(law: &Law1D) -> Result<Self> {
        match law {
            Law1D::Samples(s) => {
                if s.is_empty() {
                    return Err(Error::Empty("wasserstein1_1d"));
                }
                if s.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("wasserstein1_1d samples".into()));
                }
                let mut sorted = s.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len() as f64;
                let mut xs = Vec::new();
                let mut left = Vec::new();
                let mut right = Vec::new();
                let mut i = 0;
                while i < sorted.len() {
                    let mut j = i;
                    while j < sorted.len() && sorted[j] == sorted[i] {
                        j += 1;
                    }
                    xs.push(sorted[i]);
                    left.push(i as f64 / n);
                    right.push(j as f64 / n);
                    i = j;
                }
                Ok(Cdf { xs, left, right })
            }
            Law1D::Grid(g) => {
                let dx = g.dx();
                let total = g.mass();
                if !(total > 0.0) {
                    return Err(Error::Empty("wasserstein1_1d"));
                }
                let mut xs = Vec::with_capacity(g.len() + 1);
                let mut cum = Vec::with_capacity(g.len() + 1);
                let mut acc = 0.0;
                xs.push(g.node(0) - 0.5 * dx);
                cum.push(0.0);
                for (i, v) in g.values().iter().enumerate() {
                    acc += v * dx;
                    xs.push(g.node(i) + 0.5 * dx);
                    cum.push(acc / total);
                }
                *cum.last_mut().unwrap() = 1.0;
                Ok(Cdf { xs, left: cum.clone(), right: cum })
            }
        }
    }

    /// Right limit of the CDF at `x`.
    fn at_right(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&b| b <= x);
        if k == 0 {
            return 0.0;
        }
        let k = k - 1;
        if self.xs[k] == x || k + 1 == self.xs.len() {
            return self.right[k];
        }
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.right[k] + t * (self.left[k + 1] - self.right[k])
    }

    /// Left limit of the CDF at `x`.
    fn at_left(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&b| b < x);
        if k == self.xs.len() {
            return 1.0;
        }
        if self.xs[k] == x {
            return self.left[k];
        }
        if k == 0 {
            return 0.0;
        }
        let t = (x - self.xs[k - 1]) / (self.xs[k] - self.xs[k - 1]);
        self.right[k - 1] + t * (self.left[k] - self.right[k - 1])
    }
}

fn abs_linear_integral(a0: f64, a1: f64, width: f64) -> f64 {
    if a0 * a1 >= 0.0 {
        0.5 * (a0.abs() + a1.abs()) * width
    } else {
        0.5 * (a0 * a0 + a1 * a1) / (a0.abs() + a1.abs()) * width
    }
}

pub fn wasserstein1_1d(a: &Law1D, b: &Law1D) -> Result<f64> {
    let ca = Cdf::build(a)?;
    let cb = Cdf::build(b)?;
    let mut pts: Vec<f64> = ca.xs.iter().chain(&cb.xs).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let d0 = ca.at_right(u) - cb.at_right(u);
        let d1 = ca.at_left(v) - cb.at_left(v);
        total += abs_linear_integral(d0, d1, v - u);
    }
    Ok(total)
}
