//! One-dimensional basis families used to expand pushforward maps.
//!
//! Three families are supported:
//!
//! * `Sinusoidal`: `1, x, sin(πx/l), cos(πx/l), sin(2πx/l), cos(2πx/l), ...`
//!   truncated to `m` entries. The trigonometric terms keep their periodic
//!   formula outside `[-l, l]`.
//! * `Hat`: piecewise-linear hats on `m` uniformly spaced knots spanning
//!   `[-l, l]`, including the two boundary half-hats. They sum to one on
//!   `[-l, l]` and vanish outside it.
//! * `Polynomial`: monomials `1, x, x², ...`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    Sinusoidal,
    Hat,
    Polynomial,
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinusoidal" => Ok(BasisKind::Sinusoidal),
            "hat" | "piecewise-linear-hat" => Ok(BasisKind::Hat),
            "polynomial" => Ok(BasisKind::Polynomial),
            other => Err(Error::InvalidArgument(format!("unknown basis kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    kind: BasisKind,
    count: usize,
    half_width: f64,
}

impl BasisSet {
    pub fn new(kind: BasisKind, count: usize, half_width: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("basis needs at least one function".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "basis half-width must be positive, got {half_width}"
            )));
        }
        if kind == BasisKind::Hat && count < 2 {
            return Err(Error::InvalidArgument("hat basis needs at least two knots".into()));
        }
        Ok(Self { kind, count, half_width })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Knot spacing of the hat family.
    fn hat_spacing(&self) -> f64 {
        2.0 * self.half_width / (self.count - 1) as f64
    }

    /// Knot locations for the hat family; `None` for the other families.
    pub fn knots(&self) -> Option<Vec<f64>> {
        (self.kind == BasisKind::Hat).then(|| {
            let h = self.hat_spacing();
            (0..self.count).map(|k| -self.half_width + k as f64 * h).collect()
        })
    }

    /// Evaluates every basis function at `x` into `out` (length `m`).
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count);
        match self.kind {
            BasisKind::Polynomial => {
                let mut p = 1.0;
                for o in out.iter_mut() {
                    *o = p;
                    p *= x;
                }
            }
            BasisKind::Sinusoidal => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = sinusoidal(k, x, self.half_width);
                }
            }
            BasisKind::Hat => {
                out.iter_mut().for_each(|o| *o = 0.0);
                if let Some((k, w)) = self.hat_cell(x) {
                    out[k] = 1.0 - w;
                    if k + 1 < self.count {
                        out[k + 1] = w;
                    }
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        self.eval_into(x, &mut out);
        out
    }

    /// Evaluates the weak derivatives `φ_k'(x)` into `out`.
    ///
    /// Hats use the left-limit slope at knots.
    pub fn derivative_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count);
        match self.kind {
            BasisKind::Polynomial => {
                let mut p = 1.0;
                out[0] = 0.0;
                for (k, o) in out.iter_mut().enumerate().skip(1) {
                    *o = k as f64 * p;
                    p *= x;
                }
            }
            BasisKind::Sinusoidal => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = sinusoidal_derivative(k, x, self.half_width);
                }
            }
            BasisKind::Hat => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let l = self.half_width;
                if x <= -l || x > l {
                    return;
                }
                let h = self.hat_spacing();
                // cell (k, k+1) containing x, closed on the right
                let k = (((x + l) / h).ceil() as usize).clamp(1, self.count - 1) - 1;
                out[k] = -1.0 / h;
                out[k + 1] = 1.0 / h;
            }
        }
    }

    pub fn derivative(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        self.derivative_into(x, &mut out);
        out
    }

    /// Left knot index and interpolation weight of `x` for the hat family,
    /// `None` outside `[-l, l]`.
    pub(crate) fn hat_cell(&self, x: f64) -> Option<(usize, f64)> {
        let l = self.half_width;
        if !(x >= -l && x <= l) {
            return None;
        }
        let h = self.hat_spacing();
        let s = (x + l) / h;
        let k = (s.floor() as usize).min(self.count - 1);
        Some((k, s - k as f64))
    }

    /// Coefficients of the affine map `x ↦ shift + scale·x`, when it lies
    /// in the span of this basis.
    pub fn affine_coefficients(&self, shift: f64, scale: f64) -> Option<Vec<f64>> {
        let mut theta = vec![0.0; self.count];
        match self.kind {
            BasisKind::Polynomial | BasisKind::Sinusoidal => {
                theta[0] = shift;
                if self.count >= 2 {
                    theta[1] = scale;
                } else if scale != 0.0 {
                    return None;
                }
            }
            BasisKind::Hat => {
                for (t, x) in theta.iter_mut().zip(self.knots()?) {
                    *t = shift + scale * x;
                }
            }
        }
        Some(theta)
    }
}

fn sinusoidal(k: usize, x: f64, l: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let freq = ((k - 2) / 2 + 1) as f64 * PI / l;
            if k % 2 == 0 {
                (freq * x).sin()
            } else {
                (freq * x).cos()
            }
        }
    }
}

fn sinusoidal_derivative(k: usize, x: f64, l: f64) -> f64 {
    match k {
        0 => 0.0,
        1 => 1.0,
        _ => {
            let freq = ((k - 2) / 2 + 1) as f64 * PI / l;
            if k % 2 == 0 {
                freq * (freq * x).cos()
            } else {
                -freq * (freq * x).sin()
            }
        }
    }
}
