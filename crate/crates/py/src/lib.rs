//! Python bindings: every operation runs through the same job layer as the
//! command line, so results are the same canonical JSON documents.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::{json, Value};

use crossfield::corners::{classify_corner as classify, Scenario};
use crossfield::energy::core_energy as core;
use crossfield::export;
use crossfield::job::{self, JobRequest, JobStatus};
use crossfield::Error;

create_exception!(pycrossfield, CrossfieldError, PyValueError);
create_exception!(pycrossfield, InfeasibleError, CrossfieldError);
create_exception!(pycrossfield, IncompatibleError, CrossfieldError);
create_exception!(pycrossfield, SolverError, CrossfieldError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Infeasible { .. } => InfeasibleError::new_err(msg),
        Error::Incompatible { .. } => IncompatibleError::new_err(msg),
        Error::Solver(_) => SolverError::new_err(msg),
        _ => CrossfieldError::new_err(msg),
    }
}

/// Outcome of a job: canonical JSON plus optional SVG and CSV documents.
#[pyclass(frozen, module = "pycrossfield")]
pub struct JobOutcome {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    json: String,
    #[pyo3(get)]
    svg: Option<String>,
    #[pyo3(get)]
    csv: Option<String>,
}

#[pymethods]
impl JobOutcome {
    /// Parsed result document.
    fn result<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.json.as_str(),))
    }

    #[getter]
    fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn __repr__(&self) -> String {
        format!("JobOutcome(status={:?}, bytes={})", self.status, self.json.len())
    }
}

fn run(py: Python<'_>, doc: Value) -> PyResult<JobOutcome> {
    let req: JobRequest = serde_json::from_value(doc).map_err(|e| CrossfieldError::new_err(e.to_string()))?;
    let r = py.detach(|| job::run_job(&req)).map_err(to_py)?;
    let status = match r.status {
        JobStatus::Ok => "ok",
        JobStatus::CheckFailed => "check_failed",
        JobStatus::NotConverged => "not_converged",
    };
    Ok(JobOutcome { status: status.into(), json: r.canonical(), svg: r.svg, csv: r.csv })
}

fn mesh_doc(preset: &str, h: Option<f64>) -> Value {
    match h {
        Some(h) => json!({"preset": preset, "h": h}),
        None => json!({"preset": preset}),
    }
}

fn holes_doc(holes: &[(f64, f64, f64, i32)]) -> Value {
    holes.iter().map(|&(x, y, r, d)| json!({"center": [x, y], "radius": r, "degree": d})).collect()
}

/// Runs a request document such as `{"op": "check", "mesh": {...}, "holes": [...]}`.
#[pyfunction]
fn run_job(py: Python<'_>, request: &str) -> PyResult<JobOutcome> {
    let doc: Value = serde_json::from_str(request).map_err(|e| CrossfieldError::new_err(e.to_string()))?;
    run(py, doc)
}

/// Solve with holes given as `(x, y, radius, degree)`.
#[pyfunction]
#[pyo3(signature = (preset, holes, h=None, space="CR", svg=false))]
fn solve(py: Python<'_>, preset: &str, holes: Vec<(f64, f64, f64, i32)>, h: Option<f64>, space: &str, svg: bool) -> PyResult<JobOutcome> {
    run(
        py,
        json!({"op": "solve", "mesh": mesh_doc(preset, h), "holes": holes_doc(&holes), "space": space, "outputs": {"svg": svg}}),
    )
}

/// Poincare-Hopf ledger for holes given as `(x, y, radius, degree)`.
#[pyfunction]
#[pyo3(signature = (preset, holes, h=None))]
fn check(py: Python<'_>, preset: &str, holes: Vec<(f64, f64, f64, i32)>, h: Option<f64>) -> PyResult<JobOutcome> {
    run(py, json!({"op": "check", "mesh": mesh_doc(preset, h), "holes": holes_doc(&holes)}))
}

#[pyfunction]
#[pyo3(signature = (preset, h=None))]
fn corners(py: Python<'_>, preset: &str, h: Option<f64>) -> PyResult<JobOutcome> {
    run(py, json!({"op": "corners", "mesh": mesh_doc(preset, h)}))
}

/// Admissible corner indices `k` for opening angle `alpha`.
#[pyfunction]
#[pyo3(signature = (alpha, scenario="balanced"))]
fn classify_corner(alpha: f64, scenario: &str) -> PyResult<Vec<f64>> {
    let s = Scenario::ALL
        .into_iter()
        .find(|s| s.as_str() == scenario)
        .ok_or_else(|| CrossfieldError::new_err(format!("unknown scenario '{scenario}'")))?;
    Ok(classify(alpha, s))
}

#[pyfunction]
fn core_energy(degrees: Vec<i32>, rho: f64) -> f64 {
    core(&degrees, rho)
}

#[pyfunction]
fn fmt_g(x: f64) -> String {
    export::fmt_g(x)
}

#[pymodule]
pub fn pycrossfield(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("CrossfieldError", py.get_type::<CrossfieldError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("IncompatibleError", py.get_type::<IncompatibleError>())?;
    m.add("SolverError", py.get_type::<SolverError>())?;
    m.add_class::<JobOutcome>()?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(corners, m)?)?;
    m.add_function(wrap_pyfunction!(classify_corner, m)?)?;
    m.add_function(wrap_pyfunction!(core_energy, m)?)?;
    m.add_function(wrap_pyfunction!(fmt_g, m)?)?;
    Ok(())
}
