//! Python bindings for the hard-sphere Boltzmann solver: the main types and
//! operations, plus a configuration-driven experiment runner.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hardsphere::collision::{
    assemble_linearized, estimate_coercivity, invariant_moments, project, Collision,
    LinearizedOperator,
};
use hardsphere::config::RunConfig;
use hardsphere::forcing::ForceField;
use hardsphere::spectral::{BesovQ, DyadicFilter, SpatialGrid};
use hardsphere::velocity;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(format!("{e}"))
}

/// Truncated velocity lattice with Maxwellian and collision tables.
#[pyclass(name = "VelocityGrid")]
struct PyVelocityGrid {
    inner: Arc<velocity::VelocityGrid>,
    n_angular: usize,
}

#[pymethods]
impl PyVelocityGrid {
    #[new]
    fn new(r: f64, n_v: usize, n_angular: usize) -> PyResult<Self> {
        let inner = velocity::build_grid(r, n_v, n_angular).map_err(|e| {
            PyValueError::new_err(format!("{e}"))
        })?;
        Ok(PyVelocityGrid {
            inner: Arc::new(inner),
            n_angular,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn weight(&self) -> f64 {
        self.inner.w
    }

    #[getter]
    fn n_angular(&self) -> usize {
        self.n_angular
    }

    /// Flattened node coordinates, row-major (n^3, 3).
    fn nodes(&self) -> Vec<[f64; 3]> {
        self.inner.nodes.clone()
    }

    /// Maxwellian samples at the nodes.
    fn maxwellian_table(&self) -> Vec<f64> {
        self.inner.maxw.m.clone()
    }

    /// Collision-frequency samples at the nodes.
    fn nu_table(&self) -> Vec<f64> {
        self.inner.maxw.nu.clone()
    }

    /// Total quadrature mass of the Maxwellian (1 minus the tail).
    fn maxwellian_mass(&self) -> f64 {
        self.inner.w * self.inner.maxw.m.iter().sum::<f64>()
    }
}

/// The dense linearized collision operator on a grid.
#[pyclass(name = "LinearizedOperator")]
struct PyLinearizedOperator {
    inner: Arc<LinearizedOperator>,
}

#[pymethods]
impl PyLinearizedOperator {
    #[new]
    fn new(grid: &PyVelocityGrid) -> PyResult<Self> {
        let col = Collision::new(grid.inner.clone());
        let op = assemble_linearized(&col).map_err(err)?;
        Ok(PyLinearizedOperator {
            inner: Arc::new(op),
        })
    }

    /// Apply L to nodal values.
    fn apply(&self, g: Vec<f64>) -> PyResult<Vec<f64>> {
        if g.len() != self.inner.len() {
            return Err(PyValueError::new_err("length mismatch"));
        }
        Ok(self.inner.apply(&g))
    }

    /// Coercivity constant (spectral gap in the nu-weighted metric).
    fn coercivity(&self, max_iter: usize) -> PyResult<f64> {
        estimate_coercivity(&self.inner, max_iter).map_err(err)
    }
}

/// The normalized global Maxwellian at a velocity.
#[pyfunction]
fn maxwellian(v: [f64; 3]) -> f64 {
    velocity::maxwellian(v)
}

/// Collision frequency at an arbitrary velocity by grid quadrature.
#[pyfunction]
fn collision_frequency(v: [f64; 3], grid: &PyVelocityGrid) -> f64 {
    velocity::collision_frequency(v, &grid.inner)
}

/// Conservative bilinear collision operator Q(F, G) on nodal values.
#[pyfunction]
fn q_bilinear(f: Vec<f64>, g: Vec<f64>, grid: &PyVelocityGrid) -> PyResult<Vec<f64>> {
    let col = Collision::new(grid.inner.clone());
    col.q_bilinear(&f, &g).map_err(err)
}

/// Maxwellian-normalized collision operator Gamma(g1, g2).
#[pyfunction]
fn gamma(g1: Vec<f64>, g2: Vec<f64>, grid: &PyVelocityGrid) -> PyResult<Vec<f64>> {
    let col = Collision::new(grid.inner.clone());
    col.gamma(&g1, &g2).map_err(err)
}

/// Collision-invariant moments (mass, momentum, energy) of nodal values.
#[pyfunction]
fn moments(g: Vec<f64>, grid: &PyVelocityGrid) -> [f64; 5] {
    invariant_moments(&g, &grid.inner)
}

/// Macro-micro split: returns (five moment coefficients, micro part).
#[pyfunction]
fn macro_micro(g: Vec<f64>, grid: &PyVelocityGrid) -> ([f64; 5], Vec<f64>) {
    let (st, micro) = project(&g, &grid.inner);
    (st.coeffs, micro)
}

/// Homogeneous Besov norm of a scalar field sampled on a periodic grid.
/// `values` is row-major over the grid points; q is 1, 2 or 0 for infinity.
#[pyfunction]
fn besov_norm(
    values: Vec<f64>,
    dim: usize,
    n_x: usize,
    box_length: f64,
    s: f64,
    q: usize,
) -> PyResult<f64> {
    let grid = SpatialGrid::new(dim, n_x, box_length).map_err(err)?;
    if values.len() != grid.modes() {
        return Err(PyValueError::new_err("value count does not match the grid"));
    }
    let tf = hardsphere::spectral::Transform::new(&grid);
    let mut coeffs: Vec<num_complex::Complex64> = values
        .iter()
        .map(|x| num_complex::Complex64::new(*x, 0.0))
        .collect();
    tf.forward(&mut coeffs);
    let filter = DyadicFilter::for_grid(&grid);
    let q = match q {
        1 => BesovQ::One,
        2 => BesovQ::Two,
        0 => BesovQ::Inf,
        other => {
            return Err(PyValueError::new_err(format!(
                "q must be 1, 2 or 0 (infinity), got {other}"
            )))
        }
    };
    Ok(filter.besov(&coeffs, &grid, s, q))
}

/// Windowed rotational force field value at a centered coordinate.
#[pyfunction]
fn rotational_field(epsilon: f64, m: f64, x: [f64; 3], box_length: f64) -> PyResult<[f64; 3]> {
    if m <= 2.0 {
        return Err(PyValueError::new_err("decay exponent m must exceed 2"));
    }
    Ok(hardsphere::forcing::rotational_value(epsilon, m, x, box_length))
}

/// Norm report of a rotational field on a box (labels -> values).
#[pyfunction]
fn rotational_norms(
    epsilon: f64,
    m: f64,
    n_x: usize,
    box_length: f64,
    n_order: usize,
) -> PyResult<std::collections::BTreeMap<String, f64>> {
    let space = SpatialGrid::new(3, n_x, box_length).map_err(err)?;
    let e = ForceField::rotational(space, epsilon, m).map_err(err)?;
    Ok(e.norm_report(n_order).entries)
}

/// Run an experiment from a configuration file; returns the artifact paths.
#[pyfunction]
fn run_experiment(config_path: PathBuf) -> PyResult<Vec<String>> {
    let cfg = RunConfig::from_path(&config_path).map_err(|e| PyValueError::new_err(format!("{e}")))?;
    let artifacts = hardsphere::report::run(cfg).map_err(err)?;
    Ok(artifacts
        .files
        .into_iter()
        .map(|p| p.display().to_string())
        .collect())
}

#[pymodule]
fn hardsphere_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVelocityGrid>()?;
    m.add_class::<PyLinearizedOperator>()?;
    m.add_function(wrap_pyfunction!(maxwellian, m)?)?;
    m.add_function(wrap_pyfunction!(collision_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(q_bilinear, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(macro_micro, m)?)?;
    m.add_function(wrap_pyfunction!(besov_norm, m)?)?;
    m.add_function(wrap_pyfunction!(rotational_field, m)?)?;
    m.add_function(wrap_pyfunction!(rotational_norms, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
