use dmsim_core::dynamics::{self, Method};
use dmsim_core::fpo::{self, GAConfig, Grid, Skeleton};
use dmsim_core::model::{self, TargetFamily};
use dmsim_core::quantum::{gate_fidelity, StateVec4};
use dmsim_core::sequence::Decomposition;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(err)
}

/// Exact U(γ, τ) as a 4×4 nested list of complex numbers.
#[pyfunction]
fn propagator(gamma: f64, tau: f64) -> PyResult<Vec<Vec<Complex64>>> {
    model::EvolutionParams::new(gamma, tau).map_err(err)?;
    let u = TargetFamily::DmXy.unitary(gamma, tau);
    Ok((0..4).map(|r| (0..4).map(|c| u[(r, c)]).collect()).collect())
}

/// Period of U in τ.
#[pyfunction]
fn period(gamma: f64) -> PyResult<f64> {
    model::tau_period(gamma).map_err(err)
}

/// Fidelity of a built-in decomposition ("A", "B" or "full") at one point.
#[pyfunction]
fn decomposition_fidelity(decomp: &str, gamma: f64, tau: f64) -> PyResult<f64> {
    let d: Decomposition = decomp.parse().map_err(err)?;
    let u = d
        .sequence_at(gamma, tau)
        .and_then(|s| s.compile(0.0, 0.0))
        .map_err(err)?;
    Ok(gate_fidelity(&u, &d.target(gamma, tau)))
}

/// Fidelity profile summary over a uniform grid starting at (0, 0).
#[pyfunction]
#[pyo3(signature = (decomp, n_gamma=31, n_tau=31, gamma_max=1.0, tau_max=15.0))]
fn validate<'py>(
    py: Python<'py>,
    decomp: &str,
    n_gamma: usize,
    n_tau: usize,
    gamma_max: f64,
    tau_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let d: Decomposition = decomp.parse().map_err(err)?;
    let grid = Grid::uniform((0.0, gamma_max), n_gamma, (0.0, tau_max), n_tau).map_err(err)?;
    let p = fpo::profile_decomposition(d, &grid);
    let out = PyDict::new(py);
    out.set_item("min", p.min)?;
    out.set_item("mean", p.mean)?;
    out.set_item("argmin", p.argmin)?;
    out.set_item("values", p.values)?;
    Ok(out)
}

#[pyfunction]
fn singlet_concurrence(gamma: f64, tau: f64) -> f64 {
    dynamics::singlet_concurrence(gamma, tau)
}

/// Singlet concurrence at each τ (strictly increasing).
#[pyfunction]
#[pyo3(signature = (gamma, taus, method="exact"))]
fn concurrence_trajectory(gamma: f64, taus: Vec<f64>, method: &str) -> PyResult<Vec<f64>> {
    let m = self::method(method)?;
    dynamics::concurrence_trajectory(&StateVec4::singlet(), gamma, &taus, m)
        .map(|t| t.concurrences())
        .map_err(err)
}

/// Interrupted singlet evolution as (τ, concurrence) pairs.
#[pyfunction]
#[pyo3(signature = (gamma, segment_tau, cycles, method="exact"))]
fn preservation(gamma: f64, segment_tau: f64, cycles: usize, method: &str) -> PyResult<Vec<(f64, f64)>> {
    let m = self::method(method)?;
    let t = dynamics::preservation_trajectory(&StateVec4::singlet(), gamma, segment_tau, cycles, m)
        .map_err(err)?;
    Ok(t.points.iter().map(|p| (p.tau, p.concurrence)).collect())
}

/// Average relative deviation in percent.
#[pyfunction]
fn aed(experimental: Vec<f64>, theoretical: Vec<f64>) -> PyResult<f64> {
    dynamics::aed(&experimental, &theoretical)
        .map(|r| r.value_percent)
        .map_err(err)
}

/// Pointwise GA over (γ, τ) nodes; one dict per node.
#[pyfunction]
#[pyo3(signature = (nodes, skeleton="A", seed=None))]
fn optimize_pointwise<'py>(
    py: Python<'py>,
    nodes: Vec<(f64, f64)>,
    skeleton: &str,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let skel = Skeleton::by_name(skeleton).ok_or_else(|| err(format!("unknown skeleton '{skeleton}'")))?;
    let mut cfg = GAConfig::default();
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    let table = py
        .detach(|| fpo::optimize_pointwise(&skel, &nodes, &cfg))
        .map_err(err)?;
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("gamma", r.gamma)?;
            d.set_item("tau", r.tau)?;
            d.set_item("genes", r.genes.clone())?;
            d.set_item("fidelity", r.fidelity)?;
            d.set_item("converged", r.converged)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn dmsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(propagator, m)?)?;
    m.add_function(wrap_pyfunction!(period, m)?)?;
    m.add_function(wrap_pyfunction!(decomposition_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(singlet_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(preservation, m)?)?;
    m.add_function(wrap_pyfunction!(aed, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_pointwise, m)?)?;
    Ok(())
}
