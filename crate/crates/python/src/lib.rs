//! Python bindings: `import fama`.

use fama_core as core;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

fn to_py(err: core::FamaError) -> PyErr {
    match err {
        core::FamaError::Domain(msg) => PyValueError::new_err(msg),
        core::FamaError::Convergence(msg) => PyRuntimeError::new_err(msg),
    }
}

fn mc_mode(name: &str) -> PyResult<core::McMode> {
    Ok(match name {
        "slow" => core::McMode::Slow,
        "fast_composite" | "composite" => core::McMode::FastComposite,
        "fast_nakagami_approx" | "approx" => core::McMode::FastNakagamiApprox,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown Monte Carlo mode '{other}' (slow, fast_composite, fast_nakagami_approx)"
            )))
        }
    })
}

/// System parameters. `gamma` is the linear SIR threshold; interferer fading
/// orders default to `m` for every interferer.
#[pyclass(name = "SystemConfig", module = "fama", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    inner: core::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (users, m, gamma, n_ports=100, antenna_size=1.0, m_interferers=None))]
    fn new(
        users: usize,
        m: u32,
        gamma: f64,
        n_ports: usize,
        antenna_size: f64,
        m_interferers: Option<Vec<u32>>,
    ) -> PyResult<Self> {
        let mi = m_interferers.unwrap_or_else(|| vec![m; users.saturating_sub(1)]);
        let inner =
            core::SystemConfig::new(users, m, mi, gamma, n_ports, antenna_size).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.m
    }

    #[getter]
    fn m_interferers(&self) -> Vec<u32> {
        self.inner.m_interferers.clone()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn n_ports(&self) -> usize {
        self.inner.n_ports
    }

    #[getter]
    fn antenna_size(&self) -> f64 {
        self.inner.antenna_size
    }

    #[getter]
    fn u_tilde(&self) -> u32 {
        self.inner.u_tilde()
    }

    fn with_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(gamma);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(users={}, m={}, gamma={}, n_ports={}, antenna_size={}, m_interferers={:?})",
            c.users, c.m, c.gamma, c.n_ports, c.antenna_size, c.m_interferers
        )
    }
}

/// Partition of the ports into independent equicorrelated blocks.
#[pyclass(name = "BlockStructure", module = "fama", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlockStructure {
    inner: core::BlockStructure,
}

#[pymethods]
impl PyBlockStructure {
    #[new]
    fn new(lengths: Vec<usize>, delta: f64) -> PyResult<Self> {
        let inner = core::BlockStructure::new(lengths, delta, None).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Blocks matched to the eigenvalues of the Jakes correlation matrix.
    #[staticmethod]
    #[pyo3(signature = (n_ports, antenna_size, delta=0.97, rho_th=1.0))]
    fn jakes(n_ports: usize, antenna_size: f64, delta: f64, rho_th: f64) -> PyResult<Self> {
        let inner = core::CorrelationSpec::jakes(n_ports, antenna_size)
            .block_structure(delta, rho_th)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// One block of every port. Without `mu` the common correlation is the
    /// Jakes coefficient averaged over port pairs.
    #[staticmethod]
    #[pyo3(signature = (n_ports, antenna_size=1.0, mu=None))]
    fn constant(n_ports: usize, antenna_size: f64, mu: Option<f64>) -> PyResult<Self> {
        let mut spec = core::CorrelationSpec::constant(n_ports, antenna_size);
        spec.mu = mu;
        let inner = spec.block_structure(0.5, 1.0).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.num_blocks()
    }

    #[getter]
    fn lengths(&self) -> Vec<usize> {
        self.inner.lengths().to_vec()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn n_ports(&self) -> usize {
        self.inner.n_ports()
    }

    #[getter]
    fn eigenvalues_used(&self) -> Vec<f64> {
        self.inner.dominant_eigenvalues().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "BlockStructure(lengths={:?}, delta={})",
            self.inner.lengths(),
            self.inner.delta()
        )
    }
}

/// An outage probability with its method, error estimate and metadata.
#[pyclass(name = "OutageEstimate", module = "fama", frozen)]
struct PyOutageEstimate {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    error: f64,
    #[pyo3(get)]
    meta: BTreeMap<String, String>,
}

impl From<core::OutageEstimate> for PyOutageEstimate {
    fn from(e: core::OutageEstimate) -> Self {
        Self {
            value: e.value,
            method: e.method.as_str().to_string(),
            error: e.error,
            meta: e.meta,
        }
    }
}

#[pymethods]
impl PyOutageEstimate {
    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!(
            "OutageEstimate(value={:e}, method='{}', error={:e})",
            self.value, self.method, self.error
        )
    }
}

#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    core::db_to_linear(db)
}

#[pyfunction]
fn single_port_op(gamma: f64, m: u32, u_shape: f64) -> PyResult<f64> {
    core::single_port_op(gamma, m, u_shape).map_err(to_py)
}

#[pyfunction]
fn op_upper_bound(gamma: f64, m: u32, u_shape: f64, num_blocks: usize) -> PyResult<f64> {
    core::op_upper_bound(gamma, m, u_shape, num_blocks).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, blocks, rel_tol=1e-8))]
fn op_slow_exact(
    py: Python<'_>,
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    rel_tol: f64,
) -> PyResult<PyOutageEstimate> {
    let (c, b) = (&cfg.inner, &blocks.inner);
    py.detach(|| core::op_slow_exact(c, b, rel_tol))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, blocks, n_i=50, n_j=50))]
fn op_slow_quadrature(
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    n_i: usize,
    n_j: usize,
) -> PyResult<PyOutageEstimate> {
    core::op_slow_quadrature(&cfg.inner, &blocks.inner, n_i, n_j)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn op_slow_upper_bound(
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
) -> PyResult<PyOutageEstimate> {
    core::op_slow_upper_bound(&cfg.inner, &blocks.inner)
        .map(Into::into)
        .map_err(to_py)
}

/// `method` is one of `quad`, `exact` or `ub`.
#[pyfunction]
#[pyo3(signature = (cfg, blocks, method="quad", n_i=50, n_j=50, rel_tol=1e-8))]
fn op_fast(
    py: Python<'_>,
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    method: &str,
    n_i: usize,
    n_j: usize,
    rel_tol: f64,
) -> PyResult<PyOutageEstimate> {
    let method = match method {
        "quad" | "quadrature" => core::FastMethod::Quadrature { n_i, n_j },
        "exact" => core::FastMethod::ExactIntegral { rel_tol },
        "ub" | "upper_bound" => core::FastMethod::UpperBound,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}' (quad, exact, ub)"
            )))
        }
    };
    let (c, b) = (&cfg.inner, &blocks.inner);
    py.detach(|| core::op_fast(c, b, method))
        .map(Into::into)
        .map_err(to_py)
}

/// `(u_tilde, m_tilde, u_hat)` of the moment-matched composite interference.
#[pyfunction]
fn fast_params(m_interferers: Vec<u32>) -> PyResult<(u32, f64, f64)> {
    let p = core::fast_params(&m_interferers).map_err(to_py)?;
    Ok((p.u_tilde, p.m_tilde, p.u_hat))
}

#[pyfunction]
fn mux_gain(users: usize, p_out: f64) -> f64 {
    core::mux_gain(users, p_out)
}

#[pyfunction]
fn ofama_gain(users: usize, candidates: usize, p_out: f64) -> PyResult<f64> {
    core::ofama_gain(users, candidates, p_out).map_err(to_py)
}

#[pyfunction]
fn ofama_gain_approx(users: usize, candidates: usize, p_out: f64) -> PyResult<f64> {
    core::ofama_gain_approx(users, candidates, p_out).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (cfg, blocks, trials=1_000_000, seed=42, mode="slow"))]
fn estimate_op(
    py: Python<'_>,
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    trials: u64,
    seed: u64,
    mode: &str,
) -> PyResult<PyOutageEstimate> {
    let settings = core::McSettings::new(trials, seed, mc_mode(mode)?);
    let (c, b) = (&cfg.inner, &blocks.inner);
    py.detach(|| core::estimate_op(c, b, &settings))
        .map(Into::into)
        .map_err(to_py)
}

/// Monte Carlo outage at each threshold in `gammas` from one set of trials.
#[pyfunction]
#[pyo3(signature = (cfg, blocks, gammas, trials=1_000_000, seed=42, mode="slow"))]
fn estimate_op_sweep(
    py: Python<'_>,
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    gammas: Vec<f64>,
    trials: u64,
    seed: u64,
    mode: &str,
) -> PyResult<Vec<PyOutageEstimate>> {
    let settings = core::McSettings::new(trials, seed, mc_mode(mode)?);
    let (c, b) = (&cfg.inner, &blocks.inner);
    let out = py
        .detach(|| core::estimate_op_sweep(c, b, &settings, &gammas))
        .map_err(to_py)?;
    Ok(out.into_iter().map(Into::into).collect())
}

/// Monte Carlo gains as a dict with standard errors.
#[pyfunction]
#[pyo3(signature = (cfg, blocks, candidates, trials=1_000_000, seed=42, mode="slow"))]
fn estimate_gains<'py>(
    py: Python<'py>,
    cfg: &PySystemConfig,
    blocks: &PyBlockStructure,
    candidates: usize,
    trials: u64,
    seed: u64,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let settings = core::McSettings::new(trials, seed, mc_mode(mode)?);
    let (c, b) = (&cfg.inner, &blocks.inner);
    let g = py
        .detach(|| core::estimate_gains(c, b, &settings, candidates))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("p_out", g.p_out)?;
    d.set_item("p_out_se", g.p_out_se)?;
    d.set_item("mux_gain", g.mux_gain)?;
    d.set_item("mux_gain_se", g.mux_gain_se)?;
    d.set_item("ofama_gain", g.ofama_gain)?;
    d.set_item("ofama_gain_se", g.ofama_gain_se)?;
    Ok(d)
}

#[pymodule]
fn fama(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyBlockStructure>()?;
    m.add_class::<PyOutageEstimate>()?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(single_port_op, m)?)?;
    m.add_function(wrap_pyfunction!(op_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(op_slow_exact, m)?)?;
    m.add_function(wrap_pyfunction!(op_slow_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(op_slow_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(op_fast, m)?)?;
    m.add_function(wrap_pyfunction!(fast_params, m)?)?;
    m.add_function(wrap_pyfunction!(mux_gain, m)?)?;
    m.add_function(wrap_pyfunction!(ofama_gain, m)?)?;
    m.add_function(wrap_pyfunction!(ofama_gain_approx, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_op, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_op_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_gains, m)?)?;
    Ok(())
}
