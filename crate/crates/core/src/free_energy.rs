//! Relative-entropy free energy `F(θ) = E[V(T_θ X)] + β ∫ρ_θ log ρ_θ` and its
//! parameter gradient.
//!
//! The entropy integral is evaluated through its convex dual
//!
//! ```text
//! ∫ρ log ρ = sup_h { ∫ h ρ − ∫ e^h } + 1
//! ```
//!
//! with `h` piecewise linear on a uniform grid over `[-L, L]` and constant
//! outside it. The sample part of the objective only depends on the
//! hat-weighted sample mass at each knot, and `∫e^h` is integrated exactly
//! cell by cell, so the maximization is a smooth concave problem in the knot
//! values with a tridiagonal Hessian. It is solved by damped Newton ascent
//! with Armijo backtracking.
//!
//! Once the optimal `h*` is known the envelope theorem gives
//! `∇_θF = E[∂_θT_θ(X) (V' + β h*')(T_θ X)]`.

use log::warn;

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::map::PushforwardMap1D;
use crate::potential::Potential;
use crate::sampling::{chunked_reduce, ParticleEnsemble, Provenance, ReferenceMeasure};

/// Share of sample mass allowed outside `[-L, L]` before a warning is logged.
pub const OUTSIDE_MASS_WARNING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DualParams {
    pub knots: usize,
    /// Grid half-width `L`; `None` means `l + 4` for a map basis on `[-l, l]`.
    pub half_width: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of a uniform law on `[-L, L]` mixed into the samples. Keeps
    /// `h` bounded below at knots no sample reaches.
    pub uniform_weight: f64,
}

impl Default for DualParams {
    fn default() -> Self {
        Self { knots: 101, half_width: None, tol: 1e-6, max_iter: 5000, uniform_weight: 1e-3 }
    }
}

impl DualParams {
    pub fn resolved_half_width(&self, basis_half_width: f64) -> f64 {
        self.half_width.unwrap_or(basis_half_width + 4.0)
    }

    fn validate(&self) -> Result<()> {
        if self.knots < 2 {
            return Err(Error::InvalidArgument("dual grid needs at least two knots".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("dual tolerance must be positive".into()));
        }
        if let Some(l) = self.half_width {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument("dual half-width must be positive".into()));
            }
        }
        if !(0.0..1.0).contains(&self.uniform_weight) {
            return Err(Error::InvalidArgument("uniform weight must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Piecewise-linear dual potential `h` on uniform knots over `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    half_width: f64,
    values: Vec<f64>,
}

impl DualPotential {
    pub fn new(half_width: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidArgument("dual potential needs ≥ 2 knots and L > 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual potential".into()));
        }
        Ok(Self { half_width, values })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    pub fn knots(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.values.len()).map(|j| -self.half_width + j as f64 * h).collect()
    }

    /// Left knot index and weight of `y`, clamped to the grid ends.
    fn locate(&self, y: f64) -> (usize, f64) {
        let k = self.values.len();
        let s = (y + self.half_width) / self.spacing();
        if !(s > 0.0) {
            return (0, 0.0);
        }
        if s >= (k - 1) as f64 {
            return (k - 2, 1.0);
        }
        let j = s.floor() as usize;
        (j, s - j as f64)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (j, w) = self.locate(y);
        (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }

    /// Weak derivative, left limit at knots and zero outside `(-L, L]`.
    pub fn derivative(&self, y: f64) -> f64 {
        let l = self.half_width;
        if y <= -l || y > l {
            return 0.0;
        }
        let h = self.spacing();
        let k = self.values.len();
        let j = (((y + l) / h).ceil() as usize).clamp(1, k - 1) - 1;
        (self.values[j + 1] - self.values[j]) / h
    }

    /// `∫_{-L}^{L} e^{h(x)} dx`, exact for piecewise-linear `h`.
    pub fn exp_integral(&self) -> f64 {
        let h = self.spacing();
        self.values.windows(2).map(|w| h * cell_exp(w[0], w[1]).value).sum()
    }
}

/// `∫_0^1 e^{(1-t)a + tb} dt` and its first and second derivatives in `(a, b)`.
#[derive(Debug, Clone, Copy)]
struct CellExp {
    value: f64,
    da: f64,
    db: f64,
    daa: f64,
    dab: f64,
    dbb: f64,
}

/// Moments `∫_0^1 t^k e^{td} dt` for `k = 0, 1, 2`, valid for `d ≤ 0`.
fn exp_moments(d: f64) -> [f64; 3] {
    if d.abs() < 0.5 {
        let mut m = [0.0; 3];
        let mut term = 1.0; // d^j / j!
        for j in 0..24 {
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += term / (k + j + 1) as f64;
            }
            term *= d / (j + 1) as f64;
        }
        m
    } else {
        let e = d.exp();
        let m0 = (e - 1.0) / d;
        let m1 = (e - m0) / d;
        let m2 = (e - 2.0 * m1) / d;
        [m0, m1, m2]
    }
}

fn cell_exp(a: f64, b: f64) -> CellExp {
    // expand around the larger endpoint so the exponent is never positive
    let (hi, lo, swapped) = if b >= a { (b, a, true) } else { (a, b, false) };
    let base = hi.exp();
    let [m0, m1, m2] = exp_moments(lo - hi);
    // with s measured from `hi`: weight of `hi` is (1-s), of `lo` is s
    let v = base * m0;
    let d_lo = base * m1;
    let d_hi = base * (m0 - m1);
    let d_lolo = base * m2;
    let d_hilo = base * (m1 - m2);
    let d_hihi = base * (m0 - 2.0 * m1 + m2);
    if swapped {
        CellExp { value: v, da: d_lo, db: d_hi, daa: d_lolo, dab: d_hilo, dbb: d_hihi }
    } else {
        CellExp { value: v, da: d_hi, db: d_lo, daa: d_hihi, dab: d_hilo, dbb: d_lolo }
    }
}

/// Hat-weighted sample mass at each dual knot; mass outside `[-L, L]` goes
/// to the end knots, where `h` is constant.
fn knot_masses(ys: &[f64], half_width: f64, knots: usize) -> (Vec<f64>, f64) {
    let grid = DualPotential { half_width, values: vec![0.0; knots] };
    let n = ys.len() as f64;
    let (mut w, outside) = chunked_reduce(
        ys.len(),
        (vec![0.0; knots], 0usize),
        |range| {
            let mut w = vec![0.0; knots];
            let mut outside = 0usize;
            for &y in &ys[range] {
                if y.abs() > half_width {
                    outside += 1;
                }
                let (j, t) = grid.locate(y);
                w[j] += 1.0 - t;
                w[j + 1] += t;
            }
            (w, outside)
        },
        |acc, (w, o)| {
            acc.0.iter_mut().zip(w).for_each(|(a, b)| *a += b);
            acc.1 += o;
        },
    );
    w.iter_mut().for_each(|x| *x /= n);
    (w, outside as f64 / n)
}

/// Result of the dual entropy maximization.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub potential: DualPotential,
    /// `J(h*) = (1/n)Σ h*(y_s) − ∫e^{h*}`.
    pub objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub outside_mass: f64,
    /// Objective after every accepted step, starting from the initial guess.
    pub history: Vec<f64>,
}

impl DualSolution {
    /// Estimate of `∫ρ log ρ`.
    pub fn entropy(&self) -> f64 {
        self.objective + 1.0
    }
}

/// Largest change of a knot value in one Newton step.
const MAX_NEWTON_MOVE: f64 = 4.0;

/// Backtracking Armijo search along `dir` scaled by `step0`.
fn line_search(
    problem: &DualProblem,
    v: &[f64],
    j_cur: f64,
    dir: &[f64],
    step0: f64,
    slope: f64,
    min_step: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut step = 1.0;
    while step > min_step {
        let trial: Vec<f64> = v.iter().zip(dir).map(|(a, d)| a + step * step0 * d).collect();
        let j_trial = problem.objective(&trial);
        if j_trial.is_finite() && j_trial >= j_cur + 1e-4 * step * slope {
            return Some((trial, j_trial));
        }
        step *= 0.5;
    }
    None
}

struct DualProblem {
    masses: Vec<f64>,
    spacing: f64,
}

impl DualProblem {
    fn objective(&self, v: &[f64]) -> f64 {
        let lin: f64 = self.masses.iter().zip(v).map(|(w, h)| w * h).sum();
        let integral: f64 = v.windows(2).map(|c| self.spacing * cell_exp(c[0], c[1]).value).sum();
        lin - integral
    }

    /// Gradient and the tridiagonal of `-∇²J` (diag, off-diag).
    fn derivatives(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let k = v.len();
        let h = self.spacing;
        let mut g = self.masses.clone();
        let mut diag = vec![0.0; k];
        let mut off = vec![0.0; k - 1];
        for j in 0..k - 1 {
            let c = cell_exp(v[j], v[j + 1]);
            g[j] -= h * c.da;
            g[j + 1] -= h * c.db;
            diag[j] += h * c.daa;
            diag[j + 1] += h * c.dbb;
            off[j] = h * c.dab;
        }
        (g, diag, off)
    }
}

/// Solves a symmetric positive definite tridiagonal system in place.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut denom = diag[0];
    c[0] = if k > 1 { off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..k {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if i < k - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..k - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

fn gaussian_guess(ys: &[f64], knots: &[f64]) -> Vec<f64> {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).max(1e-4);
    knots
        .iter()
        .map(|x| {
            let z = -0.5 * (x - mean).powi(2) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
            z.max(-30.0)
        })
        .collect()
}

/// Maximizes `J(h) = (1/n)Σ h(y_s) − ∫_{-L}^{L} e^h` over piecewise-linear `h`.
pub fn solve_dual_entropy_samples(
    ys: &[f64],
    half_width: f64,
    params: &DualParams,
    warm_start: Option<&DualPotential>,
) -> Result<DualSolution> {
    params.validate()?;
    if ys.is_empty() {
        return Err(Error::Empty("dual entropy solve"));
    }
    let k = params.knots;
    let (mut masses, outside_mass) = knot_masses(ys, half_width, k);
    let eta = params.uniform_weight;
    for (j, w) in masses.iter_mut().enumerate() {
        let u = if j == 0 || j == k - 1 { 0.5 } else { 1.0 } / (k - 1) as f64;
        *w = (1.0 - eta) * *w + eta * u;
    }
    if outside_mass > OUTSIDE_MASS_WARNING {
        warn!("{:.3e} of the sample mass lies outside the dual grid [-{half_width}, {half_width}]", outside_mass);
    }
    let problem = DualProblem { masses, spacing: 2.0 * half_width / (k - 1) as f64 };

    let mut v = match warm_start {
        Some(h) if h.values.len() == k && h.half_width == half_width => h.values.clone(),
        _ => {
            let grid = DualPotential { half_width, values: vec![0.0; k] };
            gaussian_guess(ys, &grid.knots())
        }
    };

    let mut j_cur = problem.objective(&v);
    if !j_cur.is_finite() {
        return Err(Error::DualSolve { iterations: 0 });
    }
    let mut history = vec![j_cur];
    let mut converged = false;
    let mut gnorm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let (g, diag, off) = problem.derivatives(&v);
        gnorm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gnorm <= params.tol {
            converged = true;
            break;
        }
        let newton = solve_tridiagonal(&diag, &off, &g);
        let slope: f64 = g.iter().zip(&newton).map(|(a, b)| a * b).sum();
        let mut accepted = None;
        if slope > 0.0 && newton.iter().all(|d| d.is_finite()) {
            // near-empty cells have a vanishing Hessian; cap the move in h
            let big = newton.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let scale = if big > MAX_NEWTON_MOVE { MAX_NEWTON_MOVE / big } else { 1.0 };
            accepted = line_search(&problem, &v, j_cur, &newton, scale, slope * scale, 1e-10);
        }
        if accepted.is_none() {
            let gg: f64 = g.iter().map(|x| x * x).sum();
            let scale = (MAX_NEWTON_MOVE / gnorm).min(1.0);
            accepted = line_search(&problem, &v, j_cur, &g, scale, gg * scale, 1e-16);
        }
        iterations += 1;
        match accepted {
            Some((trial, j_trial)) => {
                v = trial;
                j_cur = j_trial;
                history.push(j_cur);
            }
            // no ascent possible at working precision
            None => {
                converged = gnorm <= params.tol.sqrt();
                break;
            }
        }
        if !j_cur.is_finite() {
            return Err(Error::DualSolve { iterations });
        }
    }
    if !converged && iterations >= params.max_iter {
        warn!("dual entropy solve stopped at max_iter={} with gradient {gnorm:.3e}", params.max_iter);
    }

    Ok(DualSolution {
        potential: DualPotential::new(half_width, v)?,
        objective: j_cur,
        iterations,
        gradient_norm: gnorm,
        converged,
        outside_mass,
        history,
    })
}

fn pushforward_values(map: &PushforwardMap1D, ensemble: &ParticleEnsemble) -> Result<Vec<f64>> {
    if ensemble.provenance() != Provenance::Reference || ensemble.dim() != 1 {
        return Err(Error::InvalidArgument("expected 1D reference samples".into()));
    }
    let ys: Vec<f64> = ensemble.as_slice().iter().map(|&x| map.eval(x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("pushforward samples".into()));
    }
    Ok(ys)
}

/// Dual solve on the pushforward of `ensemble` through `map`.
pub fn solve_dual_entropy(
    map: &PushforwardMap1D,
    ensemble: &ParticleEnsemble,
    params: &DualParams,
    warm_start: Option<&DualPotential>,
) -> Result<DualSolution> {
    let ys = pushforward_values(map, ensemble)?;
    let l = params.resolved_half_width(map.basis().half_width());
    solve_dual_entropy_samples(&ys, l, params, warm_start)
}

/// `(1/n) Σ V(T_θ(X_s))`.
pub fn potential_term(map: &PushforwardMap1D, ensemble: &ParticleEnsemble, v: &Potential) -> Result<f64> {
    let ys = pushforward_values(map, ensemble)?;
    Ok(mean_of(&ys, |y| v.value_1d(y)))
}

fn mean_of(ys: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let s = chunked_reduce(ys.len(), 0.0, |r| ys[r].iter().map(|&y| f(y)).sum::<f64>(), |a, p| *a += p);
    s / ys.len() as f64
}

#[derive(Debug, Clone)]
pub struct FreeEnergyEstimate {
    pub value: f64,
    pub potential_term: f64,
    /// Estimate of `∫ρ_θ log ρ_θ`; NaN when `β = 0`, where it is not needed.
    pub entropy_term: f64,
    pub witness: DualPotential,
    pub sample_count: usize,
    /// Monte-Carlo standard error of `value`.
    pub std_error: f64,
    pub dual_iterations: usize,
    pub dual_converged: bool,
}

pub fn free_energy(
    map: &PushforwardMap1D,
    ensemble: &ParticleEnsemble,
    v: &Potential,
    params: &DualParams,
    warm_start: Option<&DualPotential>,
) -> Result<FreeEnergyEstimate> {
    let ys = pushforward_values(map, ensemble)?;
    let l = params.resolved_half_width(map.basis().half_width());
    if v.beta() == 0.0 {
        return Ok(drift_only(&ys, v, l, params.knots));
    }
    let dual = solve_dual_entropy_samples(&ys, l, params, warm_start)?;
    Ok(assemble(&ys, v, dual))
}

fn drift_only(ys: &[f64], v: &Potential, half_width: f64, knots: usize) -> FreeEnergyEstimate {
    let n = ys.len() as f64;
    let potential = mean_of(ys, |y| v.value_1d(y));
    let sq = mean_of(ys, |y| (v.value_1d(y) - potential).powi(2));
    FreeEnergyEstimate {
        value: potential,
        potential_term: potential,
        entropy_term: f64::NAN,
        witness: DualPotential { half_width, values: vec![0.0; knots] },
        sample_count: ys.len(),
        std_error: (sq / n).sqrt(),
        dual_iterations: 0,
        dual_converged: true,
    }
}

fn assemble(ys: &[f64], v: &Potential, dual: DualSolution) -> FreeEnergyEstimate {
    let beta = v.beta();
    let n = ys.len() as f64;
    let potential = mean_of(ys, |y| v.value_1d(y));
    let entropy = dual.entropy();
    let h = &dual.potential;
    let integrand_mean = mean_of(ys, |y| v.value_1d(y) + beta * h.eval(y));
    let sq = mean_of(ys, |y| (v.value_1d(y) + beta * h.eval(y) - integrand_mean).powi(2));
    FreeEnergyEstimate {
        value: potential + beta * entropy,
        potential_term: potential,
        entropy_term: entropy,
        sample_count: ys.len(),
        std_error: (sq / n).sqrt(),
        dual_iterations: dual.iterations,
        dual_converged: dual.converged,
        witness: dual.potential,
    }
}

/// Envelope-theorem gradient `(1/n) Σ_s φ(X_s) (V' + β h*')(T_θ X_s)`.
pub fn grad_free_energy(
    map: &PushforwardMap1D,
    ensemble: &ParticleEnsemble,
    v: &Potential,
    witness: &DualPotential,
) -> Result<Vec<f64>> {
    if ensemble.provenance() != Provenance::Reference || ensemble.dim() != 1 {
        return Err(Error::InvalidArgument("expected 1D reference samples".into()));
    }
    let basis = map.basis();
    let m = basis.len();
    let beta = v.beta();
    let xs = ensemble.as_slice();
    let sum = chunked_reduce(
        xs.len(),
        vec![0.0; m],
        |range| {
            let mut acc = vec![0.0; m];
            let mut phi = vec![0.0; m];
            for &x in &xs[range] {
                let y = map.eval(x);
                let force = v.grad_1d(y) + beta * witness.derivative(y);
                if basis.kind() == BasisKind::Hat {
                    if let Some((k, w)) = basis.hat_cell(x) {
                        acc[k] += (1.0 - w) * force;
                        if k + 1 < m {
                            acc[k + 1] += w * force;
                        }
                    }
                } else {
                    basis.eval_into(x, &mut phi);
                    acc.iter_mut().zip(&phi).for_each(|(a, p)| *a += p * force);
                }
            }
            acc
        },
        |acc, part| acc.iter_mut().zip(part).for_each(|(a, p)| *a += p),
    );
    let n = xs.len() as f64;
    let grad: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("free-energy gradient".into()));
    }
    Ok(grad)
}

/// `(1/n) Σ [log p(X_s) − log T_θ'(X_s)]`, valid for maps increasing at
/// every sample.
pub fn entropy_change_of_variables(map: &PushforwardMap1D, ensemble: &ParticleEnsemble) -> Result<f64> {
    if ensemble.provenance() != Provenance::Reference || ensemble.dim() != 1 {
        return Err(Error::InvalidArgument("expected 1D reference samples".into()));
    }
    let xs = ensemble.as_slice();
    let mut total = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = map.derivative(x);
        if !(d > 0.0) {
            return Err(Error::NonMonotone { index: i, derivative: d });
        }
        total += ReferenceMeasure::log_density_1d(x) - d.ln();
    }
    Ok(total / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::sampling::ReferenceMeasure;

    const GAUSS_NEG_ENTROPY: f64 = -1.4189385332046727; // −½ ln(2πe)

    fn affine(b: f64, s: f64) -> PushforwardMap1D {
        let basis = BasisSet::new(BasisKind::Polynomial, 2, 4.0).unwrap();
        PushforwardMap1D::new(basis, vec![b, s]).unwrap()
    }

    fn ensemble() -> ParticleEnsemble {
        ReferenceMeasure::new(1, 5).sample(10_000).unwrap()
    }

    #[test]
    fn cell_integral_matches_quadrature() {
        for &(a, b) in &[(0.0, 0.0), (-1.0, 2.0), (3.0, -4.0), (0.1, 0.1000001), (-30.0, 1.0)] {
            let c = cell_exp(a, b);
            let n = 20_000;
            let q: f64 = (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) / n as f64;
                    ((1.0 - t) * a + t * b).exp()
                })
                .sum::<f64>()
                / n as f64;
            assert!((c.value - q).abs() < 1e-8 * q.max(1.0), "{a} {b}: {} vs {q}", c.value);
            let eps = 1e-6;
            let fda = (cell_exp(a + eps, b).value - cell_exp(a - eps, b).value) / (2.0 * eps);
            let fdb = (cell_exp(a, b + eps).value - cell_exp(a, b - eps).value) / (2.0 * eps);
            assert!((fda - c.da).abs() < 1e-6 * (1.0 + c.da.abs()));
            assert!((fdb - c.db).abs() < 1e-6 * (1.0 + c.db.abs()));
            let fdab = (cell_exp(a, b + eps).da - cell_exp(a, b - eps).da) / (2.0 * eps);
            assert!((fdab - c.dab).abs() < 1e-5 * (1.0 + c.dab.abs()));
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let diag = [4.0, 5.0, 6.0];
        let off = [1.0, 2.0];
        let x = [1.0, -2.0, 0.5];
        let rhs = [4.0 * 1.0 + 1.0 * -2.0, 1.0 + 5.0 * -2.0 + 2.0 * 0.5, 2.0 * -2.0 + 6.0 * 0.5];
        let sol = solve_tridiagonal(&diag, &off, &rhs);
        for (s, e) in sol.iter().zip(x) {
            assert!((s - e).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_potential_evaluation() {
        let h = DualPotential::new(1.0, vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(h.eval(-5.0), 0.0);
        assert_eq!(h.eval(5.0), 1.0);
        assert_eq!(h.eval(-0.5), 1.0);
        assert_eq!(h.derivative(0.0), 2.0); // left limit
        assert_eq!(h.derivative(0.5), -1.0);
        assert_eq!(h.derivative(1.5), 0.0);
        assert_eq!(h.derivative(-1.0), 0.0);
    }

    #[test]
    fn standard_normal_entropy() {
        let sol = solve_dual_entropy(&affine(0.0, 1.0), &ensemble(), &DualParams::default(), None).unwrap();
        assert!(sol.converged);
        assert!((sol.entropy() - GAUSS_NEG_ENTROPY).abs() < 5e-2, "{}", sol.entropy());
        // optimum of the dual normalizes e^h
        assert!((sol.potential.exp_integral() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn entropy_translation_and_scaling() {
        let e = ensemble();
        let p = DualParams::default();
        let base = solve_dual_entropy(&affine(0.0, 1.0), &e, &p, None).unwrap().entropy();
        let shifted = solve_dual_entropy(&affine(1.7, 1.0), &e, &p, None).unwrap().entropy();
        assert!((base - shifted).abs() < 2e-2);
        let wide = solve_dual_entropy(&affine(0.0, 2.0), &e, &p, None).unwrap().entropy();
        assert!((wide - (GAUSS_NEG_ENTROPY - 2f64.ln())).abs() < 5e-2, "{wide}");
    }

    #[test]
    fn ascent_is_monotone() {
        let sol = solve_dual_entropy(&affine(0.3, 0.7), &ensemble(), &DualParams::default(), None).unwrap();
        assert!(sol.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn warm_start_converges_to_same_solution() {
        let e = ensemble();
        let p = DualParams { tol: 1e-10, ..DualParams::default() };
        let cold = solve_dual_entropy(&affine(0.0, 1.0), &e, &p, None).unwrap();
        let prev = solve_dual_entropy(&affine(0.1, 1.1), &e, &p, None).unwrap();
        let warm = solve_dual_entropy(&affine(0.0, 1.0), &e, &p, Some(&prev.potential)).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-9);
    }

    #[test]
    fn potential_term_examples() {
        let e = ensemble();
        let zero = Potential::polynomial(vec![0.0], 0.0).unwrap();
        assert_eq!(potential_term(&affine(0.0, 1.0), &e, &zero).unwrap(), 0.0);
        let q = Potential::quadratic_1d(1.0, 0.0, 0.0).unwrap();
        assert!((potential_term(&affine(0.0, 1.0), &e, &q).unwrap() - 0.5).abs() < 0.03);
        let dw = Potential::double_well(0.0).unwrap();
        assert_eq!(potential_term(&affine(1.0, 0.0), &e, &dw).unwrap(), 0.0);
    }

    #[test]
    fn zero_beta_value_is_potential_term() {
        let q = Potential::quadratic_1d(1.0, 0.0, 0.0).unwrap();
        let f = free_energy(&affine(0.2, 1.3), &ensemble(), &q, &DualParams::default(), None).unwrap();
        assert_eq!(f.value, f.potential_term);
    }

    #[test]
    fn free_energy_of_standard_normal() {
        let q = Potential::quadratic_1d(1.0, 0.0, 1.0).unwrap();
        let f = free_energy(&affine(0.0, 1.0), &ensemble(), &q, &DualParams::default(), None).unwrap();
        assert!((f.value - (0.5 + GAUSS_NEG_ENTROPY)).abs() < 7e-2);
        assert_eq!(f.value - f.potential_term - q.beta() * f.entropy_term, 0.0);
    }

    #[test]
    fn gradient_examples() {
        let e = ensemble();
        let q = Potential::quadratic_1d(1.0, 0.0, 0.0).unwrap();
        let map = affine(0.7, 1.4);
        let f = free_energy(&map, &e, &q, &DualParams::default(), None).unwrap();
        let g = grad_free_energy(&map, &e, &q, &f.witness).unwrap();
        assert!((g[0] - 0.7).abs() < 0.05 && (g[1] - 1.4).abs() < 0.05, "{g:?}");

        let zero = Potential::polynomial(vec![0.0], 0.0).unwrap();
        let g = grad_free_energy(&map, &e, &zero, &f.witness).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn change_of_variables_entropy() {
        let e = ensemble();
        let id = entropy_change_of_variables(&affine(0.0, 1.0), &e).unwrap();
        assert!((id - GAUSS_NEG_ENTROPY).abs() < 0.03);
        let wide = entropy_change_of_variables(&affine(0.0, 2.0), &e).unwrap();
        assert!((wide - (id - 2f64.ln())).abs() < 1e-12);
        assert!(matches!(
            entropy_change_of_variables(&affine(0.0, -1.0), &e),
            Err(Error::NonMonotone { .. })
        ));
    }
}
