//! Python bindings for the Newton-CondG solver.

use std::sync::{Arc, Mutex};

use newton_condg::bench::{self, BenchmarkOptions, BenchmarkRow, Format, Selection};
use newton_condg::{
    linalg::Matrix, problems, CondGStatus, Error, FeasibleSet, IterationRecord, MajorantModel,
    NonlinearSystem, SolveReport, SolverConfig, ThetaSchedule,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::SingularMatrix { .. } => PyArithmeticError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Holds the first exception raised by a Python callback so it can be
/// re-raised once the solver returns.
#[derive(Clone, Default)]
struct Captured(Arc<Mutex<Option<PyErr>>>);

impl Captured {
    fn store(&self, err: PyErr) {
        let mut slot = self.0.lock().unwrap();
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn take(&self) -> Option<PyErr> {
        self.0.lock().unwrap().take()
    }
}

/// Wraps Python callables as a [`NonlinearSystem`]. A callback that raises
/// yields NaNs, which the solver reports as a domain violation.
fn build_system(
    dim: usize,
    f: Py<PyAny>,
    jacobian: Option<Py<PyAny>>,
    captured: &Captured,
) -> NonlinearSystem {
    let sink = captured.clone();
    let mut system = NonlinearSystem::new(dim, move |x| {
        Python::attach(|py| {
            f.call1(py, (x.to_vec(),))
                .and_then(|v| v.extract::<Vec<f64>>(py))
                .unwrap_or_else(|e| {
                    sink.store(e);
                    vec![f64::NAN; x.len()]
                })
        })
    });
    if let Some(jac) = jacobian {
        let sink = captured.clone();
        system = system.with_jacobian(move |x| {
            let n = x.len();
            Python::attach(|py| {
                jac.call1(py, (x.to_vec(),))
                    .and_then(|v| v.extract::<Vec<Vec<f64>>>(py))
                    .and_then(|rows| Matrix::from_rows(&rows).map_err(to_py))
                    .unwrap_or_else(|e| {
                        sink.store(e);
                        Matrix::from_row_major(n, n, vec![f64::NAN; n * n]).unwrap()
                    })
            })
        });
    }
    system
}

#[pyclass(
    name = "FeasibleSet",
    module = "newton_condg",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyFeasibleSet {
    inner: FeasibleSet,
}

#[pymethods]
impl PyFeasibleSet {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        let inner = FeasibleSet::new_box(lower, upper).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn simplex(radius: f64) -> PyResult<Self> {
        let inner = FeasibleSet::new_simplex(radius).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        let inner = FeasibleSet::new_ball(center, radius).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }

    fn lmo(&self, c: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.lmo(&c).map_err(to_py)
    }

    fn project(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.project(&y).map_err(to_py)
    }

    fn contains(&self, x: Vec<f64>) -> bool {
        self.inner.contains(&x)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "CondGResult", module = "newton_condg", frozen, get_all)]
struct PyCondGResult {
    point: Vec<f64>,
    inner_iterations: usize,
    final_gap: f64,
    status: &'static str,
}

#[pymethods]
impl PyCondGResult {
    fn __repr__(&self) -> String {
        format!(
            "CondGResult(status={}, inner_iterations={}, final_gap={:e})",
            self.status, self.inner_iterations, self.final_gap
        )
    }
}

/// Approximate projection of `y` onto `set`, warm-started at feasible `x`.
#[pyfunction]
#[pyo3(signature = (y, x, eps, set, max_inner = 300))]
fn condg(
    y: Vec<f64>,
    x: Vec<f64>,
    eps: f64,
    set: &PyFeasibleSet,
    max_inner: usize,
) -> PyResult<PyCondGResult> {
    let r = newton_condg::condg(&y, &x, eps, &set.inner, max_inner).map_err(to_py)?;
    Ok(PyCondGResult {
        point: r.point,
        inner_iterations: r.inner_iterations,
        final_gap: r.final_gap,
        status: match r.status {
            CondGStatus::GapReached => "GapReached",
            CondGStatus::IterationCap => "IterationCap",
        },
    })
}

#[pyclass(name = "IterationRecord", module = "newton_condg", frozen, get_all)]
struct PyIterationRecord {
    k: usize,
    x: Vec<f64>,
    residual_inf: f64,
    step_norm: Option<f64>,
    condg_eps: Option<f64>,
    condg_iterations: Option<usize>,
    condg_gap: Option<f64>,
    condg_capped: bool,
}

impl From<&IterationRecord> for PyIterationRecord {
    fn from(r: &IterationRecord) -> Self {
        Self {
            k: r.k,
            x: r.x.clone(),
            residual_inf: r.residual_inf,
            step_norm: r.step_norm,
            condg_eps: r.condg_eps,
            condg_iterations: r.condg_iterations,
            condg_gap: r.condg_gap,
            condg_capped: r.condg_capped,
        }
    }
}

#[pyclass(name = "SolveReport", module = "newton_condg", frozen, get_all)]
struct PySolveReport {
    status: &'static str,
    iterations: usize,
    final_point: Vec<f64>,
    final_residual_inf: f64,
    wall_time: f64,
    trace: Vec<Py<PyIterationRecord>>,
}

impl PySolveReport {
    fn new(py: Python<'_>, report: SolveReport) -> PyResult<Self> {
        let trace = report
            .trace
            .iter()
            .map(|r| Py::new(py, PyIterationRecord::from(r)))
            .collect::<PyResult<_>>()?;
        Ok(Self {
            status: report.status.as_str(),
            iterations: report.iterations,
            final_point: report.final_point,
            final_residual_inf: report.final_residual_inf,
            wall_time: report.wall_time,
            trace,
        })
    }
}

#[pymethods]
impl PySolveReport {
    #[getter]
    fn converged(&self) -> bool {
        self.status == "Converged"
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(status={}, iterations={}, final_residual_inf={:e})",
            self.status, self.iterations, self.final_residual_inf
        )
    }
}

/// Solves `F(x) = 0` over `set` from the feasible point `x0`.
///
/// `f` maps a list of floats to a list of floats; `jacobian`, if given, returns
/// the Jacobian as a list of rows. `theta` is a constant or a list indexed by
/// iteration (the last entry repeats).
#[pyfunction]
#[pyo3(signature = (
    f, set, x0, jacobian = None, theta = None, tol = 1e-6, max_iter = 300,
    condg_max_iter = 300, condg_cap_fatal = false
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    f: Py<PyAny>,
    set: &PyFeasibleSet,
    x0: Vec<f64>,
    jacobian: Option<Py<PyAny>>,
    theta: Option<Bound<'_, PyAny>>,
    tol: f64,
    max_iter: usize,
    condg_max_iter: usize,
    condg_cap_fatal: bool,
) -> PyResult<PySolveReport> {
    let theta = match theta {
        None => ThetaSchedule::default(),
        Some(t) => match t.extract::<f64>() {
            Ok(v) => ThetaSchedule::Constant(v),
            Err(_) => ThetaSchedule::Table(t.extract::<Vec<f64>>()?),
        },
    };
    let config = SolverConfig {
        theta,
        residual_tol: tol,
        max_outer: max_iter,
        condg_max_inner: condg_max_iter,
        condg_cap_fatal,
        ..SolverConfig::default()
    };
    let captured = Captured::default();
    let system = build_system(x0.len(), f, jacobian, &captured);
    let set = set.inner.clone();
    let result = py.detach(|| newton_condg::solve(&system, &set, &x0, &config));
    if let Some(err) = captured.take() {
        return Err(err);
    }
    PySolveReport::new(py, result.map_err(to_py)?)
}

/// One Newton step at `x`; returns `(s, y)` with `y = x + s`.
#[pyfunction]
#[pyo3(signature = (f, x, jacobian = None))]
fn newton_step(
    py: Python<'_>,
    f: Py<PyAny>,
    x: Vec<f64>,
    jacobian: Option<Py<PyAny>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let captured = Captured::default();
    let system = build_system(x.len(), f, jacobian, &captured);
    let result = py.detach(|| newton_condg::newton_step(&system, &x));
    if let Some(err) = captured.take() {
        return Err(err);
    }
    let step = result.map_err(to_py)?;
    Ok((step.s, step.y))
}

#[pyclass(name = "MajorantModel", module = "newton_condg", frozen)]
struct PyMajorantModel {
    inner: MajorantModel,
}

#[pymethods]
impl PyMajorantModel {
    #[staticmethod]
    fn holder(k: f64, p: f64) -> PyResult<Self> {
        let inner = MajorantModel::holder(k, p).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn smale(gamma: f64) -> PyResult<Self> {
        let inner = MajorantModel::smale(gamma).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn f(&self, t: f64) -> f64 {
        self.inner.f(t)
    }

    fn f_prime(&self, t: f64) -> f64 {
        self.inner.f_prime(t)
    }

    fn nu(&self) -> PyResult<f64> {
        self.inner.nu().map_err(to_py)
    }

    fn newton_map(&self, t: f64) -> PyResult<f64> {
        self.inner.newton_map(t).map_err(to_py)
    }

    #[pyo3(signature = (lambda_ = 0.0))]
    fn rho(&self, lambda_: f64) -> PyResult<f64> {
        self.inner.rho(lambda_).map_err(to_py)
    }

    /// Returns `(nu, rho, r)` with `r = min(rho, kappa)`.
    #[pyo3(signature = (lambda_ = 0.0, kappa = f64::INFINITY))]
    fn radius(&self, lambda_: f64, kappa: f64) -> PyResult<(f64, f64, f64)> {
        let b = self.inner.radius(lambda_, kappa).map_err(to_py)?;
        Ok((b.nu, b.rho, b.r))
    }

    fn majorant_sequence(&self, t0: f64, thetas: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.majorant_sequence(t0, &thetas).map_err(to_py)
    }

    fn check_h3(&self, exponent: f64) -> PyResult<bool> {
        self.inner.check_h3(exponent).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Problem", module = "newton_condg", frozen, get_all)]
struct PyProblem {
    id: String,
    name: String,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    known_root: Option<Vec<f64>>,
    source: &'static str,
}

#[pymethods]
impl PyProblem {
    fn set(&self) -> PyResult<PyFeasibleSet> {
        PyFeasibleSet::new_box(self.lower.clone(), self.upper.clone())
    }

    /// `x0 = l + 0.25 gamma (u - l)`.
    fn initial_point(&self, gamma: f64) -> PyResult<Vec<f64>> {
        problems::initial_point(&self.lower, &self.upper, gamma).map_err(to_py)
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        problems::find(&self.id)
            .and_then(|p| p.system.eval(&x))
            .map_err(to_py)
    }

    /// Solves the problem from `x0` with the given settings.
    #[pyo3(signature = (x0, theta = 1e-5, tol = 1e-6, max_iter = 300, condg_max_iter = 300, analytic_jacobian = false))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        x0: Vec<f64>,
        theta: f64,
        tol: f64,
        max_iter: usize,
        condg_max_iter: usize,
        analytic_jacobian: bool,
    ) -> PyResult<PySolveReport> {
        let p = problems::find(&self.id).map_err(to_py)?;
        let system = if analytic_jacobian {
            p.system.clone()
        } else {
            p.system.without_jacobian()
        };
        let config = SolverConfig {
            theta: ThetaSchedule::Constant(theta),
            residual_tol: tol,
            max_outer: max_iter,
            condg_max_inner: condg_max_iter,
            ..SolverConfig::default()
        };
        let set = p.feasible_set();
        let report = py
            .detach(|| newton_condg::solve(&system, &set, &x0, &config))
            .map_err(to_py)?;
        PySolveReport::new(py, report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(id={}, n={}, name={:?})",
            self.id, self.n, self.name
        )
    }
}

/// The benchmark catalog.
#[pyfunction]
fn list_problems() -> Vec<PyProblem> {
    problems::registry()
        .iter()
        .map(|p| PyProblem {
            id: p.id.clone(),
            name: p.name.clone(),
            n: p.n,
            lower: p.lower.clone(),
            upper: p.upper.clone(),
            known_root: p.known_root.clone(),
            source: p.source,
        })
        .collect()
}

#[pyclass(
    name = "BenchmarkRow",
    module = "newton_condg",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyBenchmarkRow {
    problem: String,
    gamma: f64,
    status: &'static str,
    iterations: Option<usize>,
    time_s: Option<f64>,
    residual_inf: Option<f64>,
}

impl From<BenchmarkRow> for PyBenchmarkRow {
    fn from(r: BenchmarkRow) -> Self {
        Self {
            problem: r.problem_id,
            gamma: r.gamma,
            status: r.status.as_str(),
            iterations: r.iterations,
            time_s: r.wall_time_seconds,
            residual_inf: r.final_residual_inf,
        }
    }
}

#[pymethods]
impl PyBenchmarkRow {
    fn __repr__(&self) -> String {
        format!(
            "BenchmarkRow(problem={}, gamma={}, status={}, iterations={:?})",
            self.problem, self.gamma, self.status, self.iterations
        )
    }
}

/// Runs the benchmark; returns the rows and the report rendered as
/// `format` (`"csv"` or `"table"`).
#[pyfunction]
#[pyo3(signature = (
    problems = None, gammas = vec![1.0, 2.0, 3.0], theta = 1e-5, tol = 1e-6,
    max_iter = 300, condg_max_iter = 300, analytic_jacobian = false, format = "csv"
))]
#[allow(clippy::too_many_arguments)]
fn run_benchmark(
    py: Python<'_>,
    problems: Option<Vec<String>>,
    gammas: Vec<f64>,
    theta: f64,
    tol: f64,
    max_iter: usize,
    condg_max_iter: usize,
    analytic_jacobian: bool,
    format: &str,
) -> PyResult<(Vec<PyBenchmarkRow>, String)> {
    let format: Format = format.parse().map_err(to_py)?;
    let config = SolverConfig {
        theta: ThetaSchedule::Constant(theta),
        residual_tol: tol,
        max_outer: max_iter,
        condg_max_inner: condg_max_iter,
        ..SolverConfig::default()
    };
    let options = BenchmarkOptions {
        finite_differences: !analytic_jacobian,
        ..BenchmarkOptions::default()
    };
    let rows = py
        .detach(|| {
            let selection = match &problems {
                Some(ids) => Selection::Ids(ids),
                None => Selection::All,
            };
            bench::run_benchmark(selection, &gammas, &config, &options)
        })
        .map_err(to_py)?;
    let text = bench::emit(&rows, format);
    Ok((rows.into_iter().map(PyBenchmarkRow::from).collect(), text))
}

#[pymodule]
#[pyo3(name = "newton_condg")]
fn newton_condg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeasibleSet>()?;
    m.add_class::<PyCondGResult>()?;
    m.add_class::<PyIterationRecord>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyMajorantModel>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyBenchmarkRow>()?;
    m.add_function(wrap_pyfunction!(condg, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(newton_step, m)?)?;
    m.add_function(wrap_pyfunction!(list_problems, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
