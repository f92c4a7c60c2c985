//! Python bindings. Numbers cross the boundary as floats and lists; bound
//! reports come back as dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mdi_decoy::bounds::{self, Basis, Variant};
use mdi_decoy::channel::{self, ChannelParams};
use mdi_decoy::key_rate::{self, LinkSetup, RateMethod, SignalSearch};
use mdi_decoy::oracle::{self, SuiteConfig};
use mdi_decoy::scenario::Scenario;
use mdi_decoy::source::{self, SourceFamily};
use mdi_decoy::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn basis(name: &str) -> PyResult<Basis> {
    match name {
        "Z" | "z" => Ok(Basis::Z),
        "X" | "x" => Ok(Basis::X),
        _ => Err(PyValueError::new_err(format!("basis must be \"Z\" or \"X\", got {name:?}"))),
    }
}

fn method(name: &str) -> PyResult<RateMethod> {
    RateMethod::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown method {name:?}")))
}

fn family(name: &str) -> PyResult<SourceFamily> {
    match name {
        "coherent" => Ok(SourceFamily::Coherent),
        "thermal" => Ok(SourceFamily::Thermal),
        _ => Err(PyValueError::new_err(format!("family must be \"coherent\" or \"thermal\", got {name:?}"))),
    }
}

/// Photon-number distribution truncated at `n_max`.
#[pyclass(frozen, from_py_object, name = "PhotonDistribution", module = "mdidecoy")]
#[derive(Clone)]
struct PyPhotonDistribution(source::PhotonDistribution);

#[pymethods]
impl PyPhotonDistribution {
    #[staticmethod]
    #[pyo3(signature = (mu, n_max = source::DEFAULT_N_MAX))]
    fn coherent(mu: f64, n_max: usize) -> PyResult<Self> {
        source::PhotonDistribution::coherent(mu, n_max).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (mean, n_max = source::DEFAULT_N_MAX))]
    fn thermal(mean: f64, n_max: usize) -> PyResult<Self> {
        source::PhotonDistribution::thermal(mean, n_max).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (probs, n_max = None))]
    fn custom(probs: Vec<f64>, n_max: Option<usize>) -> PyResult<Self> {
        match n_max {
            Some(n) => source::PhotonDistribution::custom_with_n_max(probs, n),
            None => source::PhotonDistribution::custom(probs),
        }
        .map(Self)
        .map_err(py_err)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.0.n_max()
    }

    #[getter]
    fn intensity(&self) -> Option<f64> {
        self.0.intensity()
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.0.tail_mass()
    }

    fn h_ratios(&self) -> Vec<f64> {
        self.0.h_ratios()
    }

    fn __repr__(&self) -> String {
        match self.0.intensity() {
            Some(mu) => format!("PhotonDistribution(intensity={mu}, n_max={})", self.0.n_max()),
            None => format!("PhotonDistribution(custom, n_max={})", self.0.n_max()),
        }
    }
}

/// One party's vacuum-like, decoy and signal sources.
#[pyclass(frozen, skip_from_py_object, name = "SourceTriple", module = "mdidecoy")]
#[derive(Clone)]
struct PySourceTriple(source::SourceTriple);

#[pymethods]
impl PySourceTriple {
    /// Checks the ratio condition and raises `ValueError` if it fails.
    #[new]
    fn new(v: PyPhotonDistribution, d: PyPhotonDistribution, s: PyPhotonDistribution) -> PyResult<Self> {
        source::SourceTriple::new(v.0, d.0, s.0).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (intensities, n_max = source::DEFAULT_N_MAX))]
    fn coherent(intensities: [f64; 3], n_max: usize) -> PyResult<Self> {
        source::SourceTriple::coherent(intensities, n_max).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (intensities, n_max = source::DEFAULT_N_MAX))]
    fn thermal(intensities: [f64; 3], n_max: usize) -> PyResult<Self> {
        source::SourceTriple::thermal(intensities, n_max).map(Self).map_err(py_err)
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.0.n_max()
    }

    /// `(v, d, s)` distributions.
    fn members(&self) -> (PyPhotonDistribution, PyPhotonDistribution, PyPhotonDistribution) {
        (
            PyPhotonDistribution(self.0.v().clone()),
            PyPhotonDistribution(self.0.d().clone()),
            PyPhotonDistribution(self.0.s().clone()),
        )
    }

    fn condition_holds(&self) -> PyResult<bool> {
        self.0.check_condition().map(|v| v.passed()).map_err(py_err)
    }
}

/// Gains and error rates for the nine source pairings of one basis.
#[pyclass(frozen, skip_from_py_object, name = "ObservedStatistics", module = "mdidecoy")]
#[derive(Clone)]
struct PyObservedStatistics(bounds::ObservedStatistics);

#[pymethods]
impl PyObservedStatistics {
    /// Rows and columns are ordered v, d, s (Alice by row).
    #[new]
    #[pyo3(signature = (gains, error_rates, basis = "Z"))]
    fn new(gains: [[f64; 3]; 3], error_rates: [[f64; 3]; 3], basis: &str) -> PyResult<Self> {
        bounds::ObservedStatistics::new(self::basis(basis)?, gains, error_rates).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        bounds::ObservedStatistics::from_json(text).map(Self).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn gains(&self) -> [[f64; 3]; 3] {
        self.0.gains
    }

    #[getter]
    fn error_rates(&self) -> [[f64; 3]; 3] {
        self.0.error_rates
    }

    #[getter]
    fn basis(&self) -> &'static str {
        match self.0.basis {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

/// Reference channel. Keywords left out take the usual defaults.
#[pyclass(frozen, skip_from_py_object, name = "ChannelParams", module = "mdidecoy")]
#[derive(Clone)]
struct PyChannelParams(ChannelParams);

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (total_loss_db = 0.0, zeta = None, p_d = None, e_d = None, e_0 = None))]
    fn new(
        total_loss_db: f64,
        zeta: Option<f64>,
        p_d: Option<f64>,
        e_d: Option<f64>,
        e_0: Option<f64>,
    ) -> PyResult<Self> {
        let d = ChannelParams::default();
        let p = ChannelParams {
            total_loss_db,
            zeta: zeta.unwrap_or(d.zeta),
            p_d: p_d.unwrap_or(d.p_d),
            e_d: e_d.unwrap_or(d.e_d),
            e_0: e_0.unwrap_or(d.e_0),
        };
        p.validate().map_err(py_err)?;
        Ok(Self(p))
    }

    #[getter]
    fn total_loss_db(&self) -> f64 {
        self.0.total_loss_db
    }

    fn with_loss(&self, total_loss_db: f64) -> Self {
        Self(self.0.with_loss(total_loss_db))
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "ChannelParams(total_loss_db={}, zeta={}, p_d={}, e_d={}, e_0={})",
            p.total_loss_db, p.zeta, p.p_d, p.e_d, p.e_0
        )
    }
}

fn report_dict<'py>(py: Python<'py>, r: &bounds::BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for v in Variant::ALL {
        d.set_item(format!("y11_{}", v.key()), r.y11(v))?;
        d.set_item(format!("e11_{}", v.key()), r.e11(v))?;
        d.set_item(format!("valid_{}", v.key()), r.diagnostic(v).valid)?;
    }
    d.set_item("y11_14a", r.y11_14a)?;
    d.set_item("y11_14b", r.y11_14b)?;
    d.set_item("ka", r.ka)?;
    d.set_item("kb", r.kb)?;
    d.set_item("y11_best", r.y11_best)?;
    d.set_item("e11_upper", r.e11_upper)?;
    d.set_item("inconsistent_data", r.inconsistent_data)?;
    Ok(d)
}

/// Every `y11` lower bound and `e11` upper bound for one basis.
#[pyfunction]
fn bound_report<'py>(
    py: Python<'py>,
    stats: &PyObservedStatistics,
    alice: &PySourceTriple,
    bob: &PySourceTriple,
) -> PyResult<Bound<'py, PyDict>> {
    let r = bounds::report_for_basis(&stats.0, &alice.0, &bob.0).map_err(py_err)?;
    report_dict(py, &r)
}

/// Model yields `y_kl` and error-weighted yields `t_kl` as nested lists.
#[pyfunction]
#[pyo3(signature = (channel, n_max = source::DEFAULT_N_MAX, basis = "Z"))]
fn true_yields(channel: &PyChannelParams, n_max: usize, basis: &str) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let t = channel::true_yields(&channel.0, n_max, self::basis(basis)?).map_err(py_err)?;
    Ok((t.y.to_rows(), t.t.to_rows()))
}

/// Statistics the reference channel would produce for these sources.
#[pyfunction]
#[pyo3(signature = (alice, bob, channel, basis = "Z"))]
fn simulate(
    alice: &PySourceTriple,
    bob: &PySourceTriple,
    channel: &PyChannelParams,
    basis: &str,
) -> PyResult<PyObservedStatistics> {
    let yields = channel::true_yields(&channel.0, alice.0.n_max(), self::basis(basis)?).map_err(py_err)?;
    channel::observe(&alice.0, &bob.0, &yields).map(PyObservedStatistics).map_err(py_err)
}

/// Key rate of a simulated link with the given method.
#[pyfunction]
#[pyo3(signature = (alice, bob, channel, method = "y11_123", f_ec = key_rate::DEFAULT_F_EC))]
fn link_key_rate<'py>(
    py: Python<'py>,
    alice: &PySourceTriple,
    bob: &PySourceTriple,
    channel: &PyChannelParams,
    method: &str,
    f_ec: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let link = LinkSetup { alice: alice.0.clone(), bob: bob.0.clone(), channel: channel.0, f_ec };
    let sim = link.simulate().map_err(py_err)?;
    let r = link.rate(&sim, self::method(method)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rate", r.rate)?;
    d.set_item("rate_raw", r.rate_raw)?;
    d.set_item("y11_z", r.y11_z)?;
    d.set_item("e11_x", r.e11_x)?;
    d.set_item("yss_z", r.yss_z)?;
    d.set_item("ess_z", r.ess_z)?;
    d.set_item("true_y11", sim.yields_z.y11())?;
    Ok(d)
}

/// Best `μ_s = ν_s` in `(μ_d, 1)` with `(μ_v, μ_d)` fixed on both sides.
#[pyfunction]
#[pyo3(signature = (mu_v, mu_d, channel, method = "y11_123", family = "coherent", f_ec = key_rate::DEFAULT_F_EC))]
fn optimize_signal_intensity<'py>(
    py: Python<'py>,
    mu_v: f64,
    mu_d: f64,
    channel: &PyChannelParams,
    method: &str,
    family: &str,
    f_ec: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut search = SignalSearch::new(mu_v, mu_d, channel.0, f_ec, self::method(method)?);
    search.family = self::family(family)?;
    let r = py.detach(|| key_rate::optimize_signal_intensity(&search)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mu_s", r.best_intensity)?;
    d.set_item("rate", r.best_rate)?;
    d.set_item("rate_raw", r.best_rate_raw)?;
    d.set_item("zero_rate", r.zero_rate)?;
    Ok(d)
}

fn scenario(config_json: Option<&str>) -> PyResult<Scenario> {
    config_json.map_or_else(|| Ok(Scenario::default()), |t| Scenario::from_json(t).map_err(py_err))
}

/// Sweep CSV for a JSON scenario, or the default scenario when omitted.
#[pyfunction]
#[pyo3(signature = (config_json = None))]
fn run_sweep(py: Python<'_>, config_json: Option<&str>) -> PyResult<String> {
    let s = scenario(config_json)?;
    py.detach(|| mdi_decoy::scenario::run_sweep(&s)).map_err(py_err)
}

/// Optimisation CSV for a JSON scenario, or the default scenario.
#[pyfunction]
#[pyo3(signature = (config_json = None))]
fn run_optimize(py: Python<'_>, config_json: Option<&str>) -> PyResult<String> {
    let s = scenario(config_json)?;
    py.detach(|| mdi_decoy::scenario::run_optimize(&s)).map_err(py_err)
}

/// Runs the randomized bound checks; returns `(passed, summary)` where the
/// summary maps each check name to `(evaluated, failed, worst_margin)`.
#[pyfunction]
#[pyo3(signature = (instances = 1000, seed = 0, n_max = None, lp = false))]
fn verify<'py>(
    py: Python<'py>,
    instances: usize,
    seed: u64,
    n_max: Option<usize>,
    lp: bool,
) -> PyResult<(bool, Bound<'py, PyDict>)> {
    let config = SuiteConfig { instances, seed, n_max, lp };
    let suite = py.detach(|| oracle::run_suite(&config)).map_err(py_err)?;
    let d = PyDict::new(py);
    for s in suite.summary() {
        d.set_item(s.name, (s.evaluated, s.failed, s.worst_margin))?;
    }
    Ok((suite.passed(), d))
}

#[pymodule]
fn mdidecoy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPhotonDistribution>()?;
    m.add_class::<PySourceTriple>()?;
    m.add_class::<PyObservedStatistics>()?;
    m.add_class::<PyChannelParams>()?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(true_yields, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(link_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_signal_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
