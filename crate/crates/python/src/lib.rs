//! Python bindings for `hyperchoq`.

use std::sync::Arc;

use hyperchoq::choquard_energy::{self as energy, ExponentClass, ProblemSpec};
use hyperchoq::geometry::{self, BallPoint, GeodesicHypersurface};
use hyperchoq::green_kernel::{self, KernelSpec};
use hyperchoq::heat_kernel::{self, HeatEvalOptions};
use hyperchoq::radial_field::RadialGrid;
use hyperchoq::solver::{self, GroundStateReport, SolverConfig};
use hyperchoq::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(hyperchoq, NoConvergence, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::NoConvergence { .. } => NoConvergence::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn opts(quad_tol: f64) -> PyResult<HeatEvalOptions> {
    let o = HeatEvalOptions { quad_tolerance: quad_tol, ..Default::default() };
    o.validate().map_err(to_py)?;
    Ok(o)
}

/// A point of the Poincare ball.
#[pyclass(name = "BallPoint", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBallPoint(BallPoint);

#[pymethods]
impl PyBallPoint {
    #[new]
    fn new(coords: Vec<f64>) -> PyResult<Self> {
        BallPoint::new(coords).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn origin(dim: usize) -> Self {
        Self(BallPoint::origin(dim))
    }

    /// Point at geodesic distance `rho` from the origin along `direction`.
    #[staticmethod]
    fn from_polar(direction: Vec<f64>, rho: f64) -> PyResult<Self> {
        BallPoint::from_polar(&direction, rho).map(Self).map_err(to_py)
    }

    #[getter]
    fn coords(&self) -> Vec<f64> {
        self.0.coords().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rho(&self) -> f64 {
        geometry::rho_origin(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("BallPoint({:?})", self.0.coords())
    }
}

#[pyclass(name = "GeodesicHypersurface", frozen)]
struct PyHypersurface(GeodesicHypersurface);

#[pymethods]
impl PyHypersurface {
    #[new]
    fn new(anchor: &PyBallPoint, normal: Vec<f64>) -> PyResult<Self> {
        GeodesicHypersurface::new(anchor.0.clone(), normal).map(Self).map_err(to_py)
    }

    fn reflect(&self, x: &PyBallPoint) -> PyResult<PyBallPoint> {
        geometry::reflect(&self.0, &x.0).map(PyBallPoint).map_err(to_py)
    }
}

#[pyfunction]
fn geodesic_distance(x: &PyBallPoint, y: &PyBallPoint) -> PyResult<f64> {
    geometry::geodesic_distance(&x.0, &y.0).map_err(to_py)
}

#[pyfunction]
fn mobius_translate(a: &PyBallPoint, x: &PyBallPoint) -> PyResult<PyBallPoint> {
    geometry::mobius_translate(&a.0, &x.0).map(PyBallPoint).map_err(to_py)
}

/// Heat kernel p_{t,N}(rho).
#[pyfunction]
#[pyo3(signature = (dim, t, rho, quad_tol = 1e-10))]
fn heat_eval(dim: usize, t: f64, rho: f64, quad_tol: f64) -> PyResult<f64> {
    heat_kernel::heat_eval(dim, t, rho, &opts(quad_tol)?).map_err(to_py)
}

/// Fractional Green kernel k_{N,alpha}(rho).
#[pyfunction]
#[pyo3(signature = (dim, alpha, rho, quad_tol = 1e-10))]
fn green_eval(dim: usize, alpha: f64, rho: f64, quad_tol: f64) -> PyResult<f64> {
    let spec = KernelSpec::new(dim, alpha).map_err(to_py)?;
    green_kernel::green_eval(&spec, rho, &opts(quad_tol)?).map_err(to_py)
}

#[pyfunction]
fn green_derivative(dim: usize, alpha: f64, rho: f64) -> PyResult<f64> {
    let spec = KernelSpec::new(dim, alpha).map_err(to_py)?;
    green_kernel::green_derivative(&spec, rho).map_err(to_py)
}

#[pyfunction]
fn heat_diagonal_constant(dim: usize) -> PyResult<f64> {
    energy::heat_diagonal_constant(dim).map_err(to_py)
}

#[pyfunction]
fn nonlocal_hls_constant(dim: usize, alpha: f64) -> PyResult<f64> {
    energy::nonlocal_hls_constant(dim, alpha).map_err(to_py)
}

#[pyfunction]
fn sharp_hls_constant(dim: usize, lam: f64) -> PyResult<f64> {
    energy::sharp_hls_constant(dim, lam).map_err(to_py)
}

/// "subcritical", "critical" or "invalid".
#[pyfunction]
fn validate_exponents(dim: usize, alpha: f64, p: f64, lam: f64) -> PyResult<&'static str> {
    if !(p > 1.0 && p.is_finite()) {
        return Ok("invalid");
    }
    let spec = ProblemSpec::new(dim, alpha, p, lam).map_err(to_py)?;
    let class = energy::validate_exponents(&spec);
    Ok(match class {
        ExponentClass::Subcritical => "subcritical",
        ExponentClass::Critical => "critical",
        ExponentClass::Invalid => "invalid",
    })
}

#[pyclass(name = "RadialGrid", frozen)]
struct PyRadialGrid(Arc<RadialGrid>);

#[pymethods]
impl PyRadialGrid {
    #[new]
    #[pyo3(signature = (dim, r_max = 40.0, nodes = 2000))]
    fn new(dim: usize, r_max: f64, nodes: usize) -> PyResult<Self> {
        RadialGrid::new(dim, r_max, nodes).map(|g| Self(Arc::new(g))).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.0.r_max()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    /// Quadrature weights including the sinh^{N-1} volume factor.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Choquard functional on a grid.
#[pyclass(name = "ChoquardFunctional", frozen)]
struct PyFunctional(energy::ChoquardFunctional);

#[pymethods]
impl PyFunctional {
    #[new]
    #[pyo3(signature = (grid, alpha = 2.0, p = 2.0, lam = 0.0))]
    fn new(grid: &PyRadialGrid, alpha: f64, p: f64, lam: f64) -> PyResult<Self> {
        let spec = ProblemSpec::new(grid.0.dim(), alpha, p, lam).map_err(to_py)?;
        energy::ChoquardFunctional::new(grid.0.clone(), spec).map(Self).map_err(to_py)
    }

    fn quotient(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.quotient(&u).map_err(to_py)
    }

    fn nonlocal_term(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.nonlocal(&u).map_err(to_py)
    }

    fn lambda_form(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.lambda_form(&u).map_err(to_py)
    }

    fn nehari_scale(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.nehari_scale(&u).map_err(to_py)
    }

    fn gradient(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.gradient(&u).map_err(to_py)
    }

    fn el_residual(&self, u: Vec<f64>) -> PyResult<f64> {
        self.0.el_residual(&u).map_err(to_py)
    }
}

#[pyclass(name = "GroundState", frozen, get_all)]
struct PyGroundState {
    rho: Vec<f64>,
    values: Vec<f64>,
    zeta: f64,
    nehari_defect: f64,
    el_residual: f64,
    iterations: usize,
    monotone: bool,
    positive: bool,
    decay_slope: Option<f64>,
}

impl From<GroundStateReport> for PyGroundState {
    fn from(r: GroundStateReport) -> Self {
        Self {
            rho: r.profile.grid().nodes().to_vec(),
            values: r.profile.values().to_vec(),
            zeta: r.zeta,
            nehari_defect: r.nehari_defect,
            el_residual: r.el_residual,
            iterations: r.iterations,
            monotone: r.monotone,
            positive: r.positive,
            decay_slope: r.decay_slope,
        }
    }
}

#[pymethods]
impl PyGroundState {
    fn __repr__(&self) -> String {
        format!("GroundState(zeta={:.10}, iterations={}, el_residual={:.2e})", self.zeta, self.iterations, self.el_residual)
    }
}

/// Radial ground state by preconditioned descent on the Nehari manifold.
#[pyfunction]
#[pyo3(signature = (dim = 3, alpha = 2.0, p = 2.0, lam = 0.0, r_max = 40.0, nodes = 2000, tol = 1e-6, max_iters = 2000))]
#[allow(clippy::too_many_arguments)]
fn solve_ground_state(
    py: Python<'_>,
    dim: usize,
    alpha: f64,
    p: f64,
    lam: f64,
    r_max: f64,
    nodes: usize,
    tol: f64,
    max_iters: usize,
) -> PyResult<PyGroundState> {
    let problem = ProblemSpec::new(dim, alpha, p, lam).map_err(to_py)?;
    let mut cfg = SolverConfig::new(problem);
    cfg.r_max = r_max;
    cfg.nodes = nodes;
    cfg.grad_tol = tol;
    cfg.max_iters = max_iters;
    let report = py.detach(|| solver::solve_ground_state(&cfg)).map_err(to_py)?;
    Ok(report.into())
}

#[pymodule]
fn hyperchoq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", hyperchoq::VERSION)?;
    m.add("NoConvergence", m.py().get_type::<NoConvergence>())?;
    m.add_class::<PyBallPoint>()?;
    m.add_class::<PyHypersurface>()?;
    m.add_class::<PyRadialGrid>()?;
    m.add_class::<PyFunctional>()?;
    m.add_class::<PyGroundState>()?;
    m.add_function(wrap_pyfunction!(geodesic_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mobius_translate, m)?)?;
    m.add_function(wrap_pyfunction!(heat_eval, m)?)?;
    m.add_function(wrap_pyfunction!(green_eval, m)?)?;
    m.add_function(wrap_pyfunction!(green_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(heat_diagonal_constant, m)?)?;
    m.add_function(wrap_pyfunction!(nonlocal_hls_constant, m)?)?;
    m.add_function(wrap_pyfunction!(sharp_hls_constant, m)?)?;
    m.add_function(wrap_pyfunction!(validate_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ground_state, m)?)?;
    Ok(())
}
