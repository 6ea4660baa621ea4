//! Python bindings: instances, exact values, BasicLP and the estimators.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cspstream::csp::{parse_instance, rational_value, write_instance};
use cspstream::gen::{Family, GenSpec};
use cspstream::local::{ALocMap, CachedALoc, ExactValALoc, LpALoc};
use cspstream::lp::render_rational;
use cspstream::reduction as red;
use cspstream::streaming::{instance_stream, StreamHeader};
use cspstream::{Assignment, Error};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, name = "Instance")]
struct PyInstance {
    inner: cspstream::Instance,
}

#[pymethods]
impl PyInstance {
    /// Parses the text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_instance(text).map_err(py_err)? })
    }

    fn to_text(&self) -> String {
        write_instance(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn sigma(&self) -> usize {
        self.inner.sigma()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, m={}, k={}, sigma={})", self.inner.n(), self.inner.m(), self.inner.k(), self.inner.sigma())
    }
}

#[pyclass(frozen, name = "EstimatorConfig")]
struct PyConfig {
    inner: red::EstimatorConfig,
    aloc: String,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        alpha, epsilon=0.1, delta=0.05, b=None, rho=None, radius=1, c_exp=0.25, q_exp=0.5,
        hash_range=None, cset_size=None, space_cap=None, seed=0, aloc="lp".to_string()
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: f64,
        epsilon: f64,
        delta: f64,
        b: Option<usize>,
        rho: Option<f64>,
        radius: usize,
        c_exp: f64,
        q_exp: f64,
        hash_range: Option<u64>,
        cset_size: Option<usize>,
        space_cap: Option<usize>,
        seed: u64,
        aloc: String,
    ) -> PyResult<Self> {
        if aloc != "lp" && aloc != "exact-val" {
            return Err(PyValueError::new_err(format!("unknown aloc {aloc:?}")));
        }
        Ok(Self {
            inner: red::EstimatorConfig {
                alpha: Some(alpha),
                epsilon,
                delta,
                b,
                rho,
                radius,
                c_exp,
                q_exp,
                hash_range,
                cset_size,
                space_cap,
                seed,
                ..Default::default()
            },
            aloc,
        })
    }
}

impl PyConfig {
    fn aloc(&self) -> Box<dyn ALocMap> {
        match self.aloc.as_str() {
            "exact-val" => Box::new(ExactValALoc),
            _ => Box::new(CachedALoc::new(LpALoc)),
        }
    }
}

/// Random instance of `maxcut`, `maxdicut`, `ksat` or `random`.
#[pyfunction]
#[pyo3(signature = (family, n, m, k=None, sigma=None, seed=0))]
fn generate(family: &str, n: usize, m: usize, k: Option<usize>, sigma: Option<usize>, seed: u64) -> PyResult<PyInstance> {
    let family: Family = family.parse().map_err(py_err)?;
    let mut spec = GenSpec::new(family, n, m).seed(seed);
    spec.k = k.unwrap_or(spec.k);
    spec.sigma = sigma.unwrap_or(spec.sigma);
    Ok(PyInstance { inner: cspstream::gen::generate(&spec).map_err(py_err)? })
}

/// Fraction of satisfied constraints, as `"p/q"`.
#[pyfunction]
fn evaluate(inst: &PyInstance, assignment: Vec<u8>) -> PyResult<String> {
    let v = cspstream::evaluate(&inst.inner, &Assignment::new(assignment)).map_err(py_err)?;
    Ok(render_rational(&v))
}

/// Optimal value by enumeration, as `"p/q"`.
#[pyfunction]
fn brute_force_val(inst: &PyInstance) -> PyResult<String> {
    Ok(render_rational(&cspstream::brute_force_val(&inst.inner).map_err(py_err)?))
}

/// Exact BasicLP optimum: `{"objective", "x", "z"}` with `"p/q"` entries.
#[pyfunction]
fn solve_basic_lp<'py>(py: Python<'py>, inst: &PyInstance) -> PyResult<Bound<'py, PyDict>> {
    let sol = cspstream::solve_basic_lp(&inst.inner).map_err(py_err)?;
    let grid = |rows: &[Vec<cspstream::Rational>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().map(render_rational).collect()).collect()
    };
    let d = PyDict::new(py);
    d.set_item("objective", render_rational(&sol.objective))?;
    d.set_item("objective_float", rational_value(&sol.objective))?;
    d.set_item("x", grid(&sol.x))?;
    d.set_item("z", grid(&sol.z))?;
    Ok(d)
}

fn estimate_dict<'py>(py: Python<'py>, e: &red::Estimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("out", e.out)?;
    d.set_item("vtilde", e.vtilde)?;
    d.set_item("centers", e.report.centers)?;
    d.set_item("fully_sampled", e.report.fully_sampled)?;
    Ok(d)
}

#[pyfunction]
fn offline_estimate<'py>(py: Python<'py>, inst: &PyInstance, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let aloc = config.aloc();
    let e = red::offline_estimate(&inst.inner, &config.inner, aloc.as_ref()).map_err(py_err)?;
    estimate_dict(py, &e)
}

/// One pass over the constraints in stored order.
#[pyfunction]
fn streaming_estimate<'py>(py: Python<'py>, inst: &PyInstance, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let aloc = config.aloc();
    let e = cspstream::streaming_estimate(instance_stream(&inst.inner), StreamHeader::of(&inst.inner), &config.inner, aloc.as_ref())
        .map_err(py_err)?;
    estimate_dict(py, &e)
}

/// Offline and streaming runs on one tape, with the coupling diagnostics.
#[pyfunction]
fn coupled_run<'py>(py: Python<'py>, inst: &PyInstance, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let aloc = config.aloc();
    let o = cspstream::coupled_run(&inst.inner, &config.inner, aloc.as_ref()).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("matched", o.matched)?;
    d.set_item("out_off", o.out_off)?;
    d.set_item("out_on", o.out_on)?;
    d.set_item("vtilde_off", o.vtilde_off)?;
    d.set_item("vtilde_on", o.vtilde_on)?;
    d.set_item("claim_failure", o.diagnostics.claim_failure)?;
    d.set_item("failed_claims", o.diagnostics.failed_claims)?;
    Ok(d)
}

#[pymodule]
fn cspstream_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_val, m)?)?;
    m.add_function(wrap_pyfunction!(solve_basic_lp, m)?)?;
    m.add_function(wrap_pyfunction!(offline_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(streaming_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_run, m)?)?;
    Ok(())
}
