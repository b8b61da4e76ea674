//! Python bindings for the parametric Fokker–Planck solver.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use paramfp::experiment::{self, ExperimentConfig};
use paramfp::oracle::{self, GridDensity, InitialLaw, Law1D};
use paramfp::{
    AffineState, BasisKind, BasisSet, DualParams, FlowConfig, ParticleEnsemble, PushforwardMap1D, ReferenceMeasure,
    ResampleMode,
};

create_exception!(paramfp_py, ParamfpError, PyException);

fn py_err(e: paramfp::Error) -> PyErr {
    ParamfpError::new_err(format!("{}: {}", e.kind(), e))
}

fn dual_params(knots: Option<usize>, tol: Option<f64>) -> DualParams {
    let d = DualParams::default();
    DualParams { knots: knots.unwrap_or(d.knots), tol: tol.unwrap_or(d.tol), ..d }
}

/// Confining potential `V` together with the diffusion strength `β`.
#[pyclass(name = "Potential", frozen)]
struct PyPotential(paramfp::Potential);

#[pymethods]
impl PyPotential {
    /// `V(x) = (x+1)²(x−1)²`.
    #[staticmethod]
    fn double_well(beta: f64) -> PyResult<Self> {
        paramfp::Potential::double_well(beta).map(Self).map_err(py_err)
    }

    /// `V(x) = (x−μ)²/(2σ)` in one dimension.
    #[staticmethod]
    fn quadratic(sigma: f64, mu: f64, beta: f64) -> PyResult<Self> {
        paramfp::Potential::quadratic_1d(sigma, mu, beta).map(Self).map_err(py_err)
    }

    /// Polynomial with ascending coefficients.
    #[staticmethod]
    fn polynomial(coefficients: Vec<f64>, beta: f64) -> PyResult<Self> {
        paramfp::Potential::polynomial(coefficients, beta).map(Self).map_err(py_err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn value(&self, y: f64) -> f64 {
        self.0.value_1d(y)
    }

    fn grad(&self, y: f64) -> f64 {
        self.0.grad_1d(y)
    }
}

/// Map `T_θ(x) = Σ θ_k φ_k(x)` over a basis family.
#[pyclass(name = "Map1D", frozen)]
struct PyMap(PushforwardMap1D);

fn basis(kind: &str, m: usize, l: f64) -> PyResult<BasisSet> {
    let kind: BasisKind = kind.parse().map_err(py_err)?;
    BasisSet::new(kind, m, l).map_err(py_err)
}

#[pymethods]
impl PyMap {
    #[new]
    fn new(kind: &str, m: usize, l: f64, theta: Vec<f64>) -> PyResult<Self> {
        PushforwardMap1D::new(basis(kind, m, l)?, theta).map(Self).map_err(py_err)
    }

    /// The map `x ↦ shift + scale·x` expressed in the basis.
    #[staticmethod]
    fn affine(kind: &str, m: usize, l: f64, shift: f64, scale: f64) -> PyResult<Self> {
        PushforwardMap1D::affine(basis(kind, m, l)?, shift, scale).map(Self).map_err(py_err)
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.0.theta().to_vec()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.0.derivative(x)
    }

    fn with_theta(&self, theta: Vec<f64>) -> PyResult<Self> {
        self.0.with_theta(theta).map(Self).map_err(py_err)
    }
}

/// Standard-normal reference samples.
#[pyclass(name = "Ensemble", frozen)]
struct PyEnsemble(ParticleEnsemble);

#[pymethods]
impl PyEnsemble {
    #[staticmethod]
    #[pyo3(signature = (n, seed, epoch = 0))]
    fn reference(n: usize, seed: u64, epoch: u32) -> PyResult<Self> {
        ReferenceMeasure::new(1, seed).with_epoch(epoch).sample(n).map(Self).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    /// Images `T_θ(X_s)` of the samples.
    fn pushforward(&self, map: &PyMap) -> PyResult<Vec<f64>> {
        paramfp::pushforward_samples(&map.0, &self.0).map(|e| e.into_points()).map_err(py_err)
    }
}

/// Monte-Carlo free energy; returns a dict with `value`, `potential_term`,
/// `entropy_term`, `std_error` and `dual_iterations`.
#[pyfunction]
#[pyo3(signature = (map, ensemble, potential, knots = None, tol = None))]
fn free_energy<'py>(
    py: Python<'py>,
    map: &PyMap,
    ensemble: &PyEnsemble,
    potential: &PyPotential,
    knots: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let est = paramfp::free_energy(&map.0, &ensemble.0, &potential.0, &dual_params(knots, tol), None)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", est.value)?;
    d.set_item("potential_term", est.potential_term)?;
    d.set_item("entropy_term", est.entropy_term)?;
    d.set_item("std_error", est.std_error)?;
    d.set_item("dual_iterations", est.dual_iterations)?;
    Ok(d)
}

/// Gradient of the free energy in `θ`.
#[pyfunction]
#[pyo3(signature = (map, ensemble, potential, knots = None, tol = None))]
fn grad_free_energy(
    map: &PyMap,
    ensemble: &PyEnsemble,
    potential: &PyPotential,
    knots: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Vec<f64>> {
    let est = paramfp::free_energy(&map.0, &ensemble.0, &potential.0, &dual_params(knots, tol), None)
        .map_err(py_err)?;
    paramfp::grad_free_energy(&map.0, &ensemble.0, &potential.0, &est.witness).map_err(py_err)
}

/// Dual estimate of `∫ρ log ρ` for the pushforward law.
#[pyfunction]
#[pyo3(signature = (map, ensemble, knots = None, tol = None))]
fn entropy(map: &PyMap, ensemble: &PyEnsemble, knots: Option<usize>, tol: Option<f64>) -> PyResult<f64> {
    paramfp::solve_dual_entropy(&map.0, &ensemble.0, &dual_params(knots, tol), None)
        .map(|s| s.entropy())
        .map_err(py_err)
}

/// Metric `G_ij = E[φ_i(X) φ_j(X)]` as a list of rows.
#[pyfunction]
fn metric(map: &PyMap, ensemble: &PyEnsemble) -> PyResult<Vec<Vec<f64>>> {
    let g = paramfp::metric_1d(&map.0, &ensemble.0).map_err(py_err)?;
    let e = g.entries();
    Ok((0..e.nrows()).map(|i| e.row(i).iter().copied().collect()).collect())
}

/// Integrates the parametric flow; returns a dict with `times`, `thetas`,
/// `free_energies`, `final_samples` and `complete`.
#[pyfunction]
#[pyo3(signature = (map, potential, dt, steps, n = 10_000, seed = 0, per_step_resampling = false, knots = None))]
#[allow(clippy::too_many_arguments)]
fn run_flow<'py>(
    py: Python<'py>,
    map: &PyMap,
    potential: &PyPotential,
    dt: f64,
    steps: usize,
    n: usize,
    seed: u64,
    per_step_resampling: bool,
    knots: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = FlowConfig {
        dt,
        steps,
        sample_count: n,
        ridge: None,
        resample: if per_step_resampling { ResampleMode::PerStep } else { ResampleMode::Frozen },
        snapshot_stride: steps.max(1),
        seed,
        dual: dual_params(knots, None),
    };
    let run = py.detach(|| paramfp::run_flow(&map.0, &potential.0, &config)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("times", &run.trajectory.times)?;
    d.set_item("thetas", &run.trajectory.thetas)?;
    d.set_item("free_energies", &run.trajectory.free_energies)?;
    d.set_item("final_samples", run.snapshots.last().map(|s| s.samples.clone()).unwrap_or_default())?;
    d.set_item("complete", run.failure.is_none())?;
    if let Some(e) = &run.failure {
        d.set_item("error", format!("{}: {}", e.kind(), e))?;
    }
    Ok(d)
}

/// Exact affine flow for a one-dimensional quadratic potential from
/// `N(mu0, sigma0²)`; returns `(times, scales, shifts)`.
#[pyfunction]
fn integrate_affine(
    sigma0: f64,
    mu0: f64,
    potential: &PyPotential,
    dt: f64,
    horizon: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let init = AffineState::new(
        nalgebra::DMatrix::from_element(1, 1, sigma0),
        nalgebra::DVector::from_element(1, mu0),
        0.0,
    )
    .map_err(py_err)?;
    let states = paramfp::integrate_affine(&init, &potential.0, dt, horizon).map_err(py_err)?;
    Ok((
        states.iter().map(|s| s.t).collect(),
        states.iter().map(|s| s.gamma[(0, 0)]).collect(),
        states.iter().map(|s| s.b[0]).collect(),
    ))
}

/// Finite-volume solution from `N(mean, std²)`; returns `(nodes, density)`.
#[pyfunction]
#[pyo3(signature = (potential, horizon, mean = 0.0, std = 1.0, half_width = 3.0, nodes = 2001, dt = None))]
fn fd_solve(
    py: Python<'_>,
    potential: &PyPotential,
    horizon: f64,
    mean: f64,
    std: f64,
    half_width: f64,
    nodes: usize,
    dt: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let rho0 = GridDensity::gaussian(half_width, nodes, mean, std).map_err(py_err)?;
    let dt = dt.unwrap_or_else(|| 0.9 * oracle::stability_bound(&rho0, &potential.0));
    let rho = py.detach(|| oracle::fd_solve(&rho0, &potential.0, dt, horizon)).map_err(py_err)?;
    Ok((rho.nodes(), rho.values().to_vec()))
}

/// Euler–Maruyama particles from `N(mean, std²)` at time `horizon`.
#[pyfunction]
#[pyo3(signature = (potential, n, horizon, mean = 0.0, std = 1.0, dt = 1e-3, seed = 0))]
fn sde_simulate(
    py: Python<'_>,
    potential: &PyPotential,
    n: usize,
    horizon: f64,
    mean: f64,
    std: f64,
    dt: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let init = InitialLaw::normal_1d(mean, std);
    py.detach(|| oracle::sde_simulate(n, &potential.0, &init, dt, horizon, seed))
        .map(|e| e.into_points())
        .map_err(py_err)
}

/// Normalized Gibbs density on a grid; returns `(nodes, density)`.
#[pyfunction]
#[pyo3(signature = (potential, half_width = 3.0, nodes = 2001))]
fn gibbs_density(potential: &PyPotential, half_width: f64, nodes: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let g = oracle::gibbs_density(&potential.0, half_width, nodes).map_err(py_err)?;
    Ok((g.nodes(), g.values().to_vec()))
}

/// `W1` between two sample sets.
#[pyfunction]
fn wasserstein1(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    oracle::wasserstein1_1d(&Law1D::Samples(a), &Law1D::Samples(b)).map_err(py_err)
}

/// `W1` between samples and a grid density given on `half_width`-spaced nodes.
#[pyfunction]
fn wasserstein1_to_grid(samples: Vec<f64>, half_width: f64, density: Vec<f64>) -> PyResult<f64> {
    let g = GridDensity::new(half_width, density).map_err(py_err)?;
    oracle::wasserstein1_1d(&Law1D::Samples(samples), &Law1D::Grid(g)).map_err(py_err)
}

/// Runs an experiment from TOML text, writes its artifacts and returns the
/// summary as TOML text.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(py_err)?;
    let out = py.detach(|| experiment::run(&cfg)).map_err(py_err)?;
    out.summary().to_toml_string().map_err(py_err)
}

/// Default double-well experiment config as TOML text.
#[pyfunction]
fn default_config() -> PyResult<String> {
    ExperimentConfig::default_double_well().resolved().to_toml_string().map_err(py_err)
}

#[pymodule]
fn paramfp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ParamfpError", m.py().get_type::<ParamfpError>())?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyMap>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(grad_free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(metric, m)?)?;
    m.add_function(wrap_pyfunction!(run_flow, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_affine, m)?)?;
    m.add_function(wrap_pyfunction!(fd_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sde_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_density, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1_to_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
