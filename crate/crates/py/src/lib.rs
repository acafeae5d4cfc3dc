//! Python bindings: `import snc`.
//!
//! Parameter and path types are classes; analysis results come back as
//! plain dicts. Library errors raise `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use snc_core::analytics::{self, GridSpec, Scheme};
use snc_core::complexity::{self, ComplexityBudget};
use snc_core::optimizer::{self, Objective, OptimizerConfig, SearchOutcome};
use snc_core::oracle::{self, RelayMode, SimConfig};
use snc_core::Error;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CodeParams", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyCodeParams(snc_core::CodeParams);

#[pymethods]
impl PyCodeParams {
    #[new]
    #[pyo3(signature = (k, n, q = 8, packet_bytes = 100))]
    fn new(k: usize, n: usize, q: u8, packet_bytes: usize) -> PyResult<Self> {
        snc_core::CodeParams::new(k, n, q, packet_bytes).map(Self).map_err(err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn q(&self) -> u8 {
        self.0.q()
    }

    #[getter]
    fn packet_bytes(&self) -> usize {
        self.0.packet_bytes()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    #[getter]
    fn symbols(&self) -> usize {
        self.0.symbols()
    }

    fn with_n(&self, n: usize) -> PyResult<Self> {
        self.0.with_n(n).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("CodeParams(k={}, n={}, q={}, packet_bytes={})", self.0.k(), self.0.n(), self.0.q(), self.0.packet_bytes())
    }
}

#[pyclass(name = "PathProfile", frozen, from_py_object)]
#[derive(Clone)]
struct PyPathProfile(analytics::PathProfile);

#[pymethods]
impl PyPathProfile {
    #[new]
    fn new(deltas: Vec<f64>) -> PyResult<Self> {
        analytics::PathProfile::new(deltas).map(Self).map_err(err)
    }

    #[staticmethod]
    fn homogeneous(delta: f64, hops: usize) -> PyResult<Self> {
        analytics::PathProfile::homogeneous(delta, hops).map(Self).map_err(err)
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.0.deltas().to_vec()
    }

    #[getter]
    fn hops(&self) -> usize {
        self.0.hops()
    }

    fn __repr__(&self) -> String {
        format!("PathProfile({:?})", self.0.deltas())
    }
}

#[pyclass(name = "Packet", frozen, from_py_object)]
#[derive(Clone)]
struct PyPacket(snc_core::Packet);

#[pymethods]
impl PyPacket {
    #[getter]
    fn payload(&self) -> Vec<u8> {
        self.0.payload.clone()
    }

    #[getter]
    fn coeffs(&self) -> Vec<u8> {
        self.0.coeffs.clone()
    }

    #[getter]
    fn systematic_index(&self) -> Option<usize> {
        self.0.systematic_index
    }
}

type Decoded = (Vec<Option<Vec<u8>>>, bool, usize);

#[pyclass(name = "Codec", frozen)]
struct PyCodec(snc_core::Codec);

#[pymethods]
impl PyCodec {
    #[new]
    fn new(params: PyCodeParams) -> PyResult<Self> {
        snc_core::Codec::new(params.0).map(Self).map_err(err)
    }

    /// `k` payloads of `symbols` field elements each.
    fn encode(&self, payloads: Vec<Vec<u8>>, seed: u64) -> PyResult<Vec<PyPacket>> {
        let gen = snc_core::Generation::from_payloads(payloads, seed);
        let out = self.0.encode(&gen).map_err(err)?;
        Ok(out.into_iter().map(PyPacket).collect())
    }

    /// Returns `(payloads, full_decode, rank)`; unrecovered payloads are None.
    fn decode(&self, packets: Vec<PyPacket>) -> PyResult<Decoded> {
        let rx: Vec<snc_core::Packet> = packets.into_iter().map(|p| p.0).collect();
        let d = self.0.decode(&rx).map_err(err)?;
        Ok((d.payloads, d.full_decode, d.rank))
    }
}

#[pyfunction]
fn rper_single_hop(params: PyCodeParams, delta: f64) -> f64 {
    analytics::rper_single_hop(&params.0, delta)
}

#[pyfunction]
fn reliability_nc(params: PyCodeParams, path: PyPathProfile, h: usize) -> PyResult<f64> {
    analytics::reliability_nc(&params.0, &path.0, h).map_err(err)
}

#[pyfunction]
fn reliability_uncoded(path: PyPathProfile, h: usize) -> PyResult<f64> {
    analytics::reliability_uncoded(&path.0, h).map_err(err)
}

#[pyfunction]
fn achievable_rate(params: PyCodeParams, path: PyPathProfile, m: usize) -> PyResult<f64> {
    analytics::achievable_rate(&params.0, &path.0, m).map_err(err)
}

#[pyfunction]
fn theorem1_region_check<'py>(
    py: Python<'py>,
    params: PyCodeParams,
    path: PyPathProfile,
    m: usize,
    candidate_rate: f64,
    eta0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let c = analytics::theorem1_region_check(&params.0, &path.0, m, candidate_rate, eta0).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("satisfies", c.satisfies)?;
    d.set_item("violated", c.violated.iter().map(|v| v.to_string()).collect::<Vec<_>>())?;
    d.set_item("eta", c.eta)?;
    d.set_item("upstream_rate", c.upstream_rate)?;
    Ok(d)
}

fn budget(source: u64, relay: Option<u64>, dest: Option<u64>) -> PyResult<ComplexityBudget> {
    ComplexityBudget::new(source, relay.unwrap_or(source), dest.unwrap_or(source)).map_err(err)
}

/// Gate counts per role.
#[pyfunction]
#[pyo3(name = "complexity")]
fn gate_counts<'py>(py: Python<'py>, params: PyCodeParams) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for r in [
        complexity::encoding_complexity(&params.0),
        complexity::relay_complexity(&params.0),
        complexity::decoding_complexity(&params.0),
    ] {
        let e = PyDict::new(py);
        e.set_item("n_mul", r.n_mul)?;
        e.set_item("n_add", r.n_add)?;
        e.set_item("gates", r.gates)?;
        d.set_item(r.role.to_string(), e)?;
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (template, beta0_source, beta0_relay = None, beta0_dest = None))]
fn max_n_under_budget<'py>(
    py: Python<'py>,
    template: PyCodeParams,
    beta0_source: u64,
    beta0_relay: Option<u64>,
    beta0_dest: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = complexity::max_n_under_budget(&template.0, &budget(beta0_source, beta0_relay, beta0_dest)?)
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("source", b.source)?;
    d.set_item("relay", b.relay)?;
    d.set_item("dest", b.dest)?;
    Ok(d)
}

fn outcome_name(o: SearchOutcome) -> &'static str {
    match o {
        SearchOutcome::NoCoding => "no-coding",
        SearchOutcome::BestEffort => "best-effort",
        SearchOutcome::MaxRedundancy => "max-redundancy",
        SearchOutcome::Bisection => "bisection",
        SearchOutcome::Exhaustive { .. } => "exhaustive",
    }
}

#[pyfunction]
#[pyo3(signature = (template, path, rho0, beta0_source, beta0_relay = None, beta0_dest = None, max_redundancy = false))]
#[allow(clippy::too_many_arguments)]
fn optimize_rate<'py>(
    py: Python<'py>,
    template: PyCodeParams,
    path: PyPathProfile,
    rho0: f64,
    beta0_source: u64,
    beta0_relay: Option<u64>,
    beta0_dest: Option<u64>,
    max_redundancy: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let objective = if max_redundancy { Objective::MaxRedundancy } else { Objective::UtilityArgmax };
    let config = OptimizerConfig { objective, ..OptimizerConfig::default() };
    let b = budget(beta0_source, beta0_relay, beta0_dest)?;
    let o = optimizer::optimize_rate(&template.0, &path.0, rho0, &b, &config).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", o.point.n)?;
    d.set_item("r", o.point.r)?;
    d.set_item("utility", o.point.utility)?;
    d.set_item("reliability", o.point.reliability)?;
    d.set_item("cost", o.point.cost)?;
    d.set_item("meets_target", o.point.meets_target)?;
    d.set_item("n_max", o.n_max)?;
    d.set_item("outcome", outcome_name(o.outcome))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (template, delta, rho0, beta0_source, beta0_relay = None, beta0_dest = None))]
fn connectivity_gain<'py>(
    py: Python<'py>,
    template: PyCodeParams,
    delta: f64,
    rho0: f64,
    beta0_source: u64,
    beta0_relay: Option<u64>,
    beta0_dest: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = budget(beta0_source, beta0_relay, beta0_dest)?;
    let c = optimizer::connectivity_gain(&template.0, delta, rho0, &b, None).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("h_nc", c.h_nc)?;
    d.set_item("h_unc", c.h_unc)?;
    d.set_item("gamma", c.gamma)?;
    d.set_item("n_single_hop", c.n_single_hop)?;
    d.set_item("n_multi_hop", c.n_multi_hop)?;
    Ok(d)
}

/// Two-hop rate region: `(axis, feasible, best_r)` with row index `delta1`.
#[pyfunction]
#[pyo3(signature = (scheme, k = 50, eta0 = 0.05, rate_min = 0.5, rate_max = 1.0, delta_max = 0.5, step = 0.01))]
#[allow(clippy::type_complexity)]
fn rate_region_grid(
    scheme: &str,
    k: usize,
    eta0: f64,
    rate_min: f64,
    rate_max: f64,
    delta_max: f64,
    step: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<bool>>, Vec<Vec<Option<f64>>>)> {
    let scheme = match scheme {
        "nc" => Scheme::NcCase,
        "e2e" => Scheme::EndToEnd,
        other => return Err(PyValueError::new_err(format!("unknown scheme {other}; use 'nc' or 'e2e'"))),
    };
    let spec = GridSpec { k, rate_min, rate_max, eta0, delta_max, step };
    let g = analytics::rate_region_grid(scheme, &spec).map_err(err)?;
    let feasible = g.cells.iter().map(|r| r.iter().map(|c| c.feasible).collect()).collect();
    let best_r = g.cells.iter().map(|r| r.iter().map(|c| c.best_r).collect()).collect();
    Ok((g.delta1_axis, feasible, best_r))
}

/// Monte-Carlo estimate of the per-hop reliability.
#[pyfunction]
#[pyo3(signature = (params, path, trials, seed = 1, forward_only = false))]
fn simulate<'py>(
    py: Python<'py>,
    params: PyCodeParams,
    path: PyPathProfile,
    trials: usize,
    seed: u64,
    forward_only: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = if forward_only { RelayMode::ForwardOnly } else { RelayMode::DecodeReencode };
    let cfg = SimConfig::new(params.0, path.0, trials, seed).with_mode(mode);
    let analytic = cfg.analytic_rho().map_err(err)?;
    let est = py.detach(|| oracle::simulate(&cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rho_hat", est.rho_hat)?;
    d.set_item("eta_hat", est.eta_hat)?;
    d.set_item("stderr", est.stderr)?;
    d.set_item("trials", est.trials)?;
    d.set_item("analytic_rho", analytic)?;
    Ok(d)
}

#[pymodule]
fn snc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodeParams>()?;
    m.add_class::<PyPathProfile>()?;
    m.add_class::<PyPacket>()?;
    m.add_class::<PyCodec>()?;
    m.add_function(wrap_pyfunction!(rper_single_hop, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_nc, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_uncoded, m)?)?;
    m.add_function(wrap_pyfunction!(achievable_rate, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_region_check, m)?)?;
    m.add_function(wrap_pyfunction!(gate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(max_n_under_budget, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_rate, m)?)?;
    m.add_function(wrap_pyfunction!(connectivity_gain, m)?)?;
    m.add_function(wrap_pyfunction!(rate_region_grid, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
