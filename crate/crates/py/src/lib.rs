//! Python bindings for `rwlab`.
//!
//! Chains and weights are opaque handles; numerical results come back as
//! plain floats, lists and dicts. Every computing function takes a
//! `precision` in decimal digits (default 34).

use std::collections::HashMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use rug::Float;

use rwlab::chain::{self, ChainSpec};
use rwlab::harness::{self, ConjectureReport, HarnessConfig};
use rwlab::weight::WeightSpec;
use rwlab::{families, limits, measure, montecarlo, normalization, polynomials, recover, specfile};
use rwlab::{Backend, Precision, Real};

create_exception!(rwlab_py, RwlabError, PyException);

fn err(e: rwlab::Error) -> PyErr {
    RwlabError::new_err(e.to_string())
}

/// Runs `$body` with `$r` bound to the backend type chosen for `$prec`.
macro_rules! with_backend {
    ($prec:expr, $r:ident => $body:expr) => {
        match Backend::for_precision($prec) {
            Backend::Double => {
                type $r = f64;
                $body
            }
            Backend::Multi => {
                type $r = Float;
                $body
            }
        }
    };
}

fn precision(digits: u32) -> Precision {
    Precision::digits(digits)
}

#[pyclass(name = "Chain", module = "rwlab_py", frozen)]
struct PyChain {
    inner: ChainSpec,
}

#[pymethods]
impl PyChain {
    /// Reference chain by name: A, B, C, S, K, T, TK, KC, R4, R2.
    #[staticmethod]
    fn family(name: &str) -> PyResult<Self> {
        let inner = match name.to_ascii_uppercase().as_str() {
            "A" => families::arcsine(),
            "B" => families::shifted_arcsine(),
            "C" => families::asymmetric(),
            "S" => families::semicircle(),
            "K" => families::killed_shifted_arcsine(),
            "T" => families::transient(),
            "TK" => families::killed_transient(),
            "KC" => families::constant_killing(),
            "R4" => families::geometric_holding(),
            "R2" => families::inverse_square_holding(),
            other => return Err(RwlabError::new_err(format!("unknown chain family '{other}'"))),
        };
        Ok(PyChain { inner })
    }

    /// Chain from the `[chain]` table of a config file.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = specfile::parse_config(text).map_err(err)?;
        cfg.chain
            .map(|inner| PyChain { inner })
            .ok_or_else(|| RwlabError::new_err("config has no [chain] table"))
    }

    /// Finite chain from exact coefficient strings such as `"1/2"`.
    #[staticmethod]
    #[pyo3(signature = (p, q, r=None, kappa=None, label="custom"))]
    fn from_prefix(
        p: Vec<String>,
        q: Vec<String>,
        r: Option<Vec<String>>,
        kappa: Option<Vec<String>>,
        label: &str,
    ) -> PyResult<Self> {
        let parse = |v: &[String]| chain::parse_rationals(v).map_err(err);
        let inner = ChainSpec::new(
            label,
            parse(&p)?,
            parse(&q)?,
            parse(&r.unwrap_or_default())?,
            parse(&kappa.unwrap_or_default())?,
            None,
        )
        .map_err(err)?;
        Ok(PyChain { inner })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn is_periodic(&self) -> PyResult<bool> {
        self.inner.is_periodic().map_err(err)
    }

    fn has_killing(&self) -> PyResult<bool> {
        self.inner.has_killing().map_err(err)
    }

    /// `(p_j, q_j, r_j, kappa_j)` for `j < n`.
    fn coefficients(&self, n: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let t = self.inner.table::<f64>(n, Precision::double()).map_err(err)?;
        Ok((0..n).map(|j| (t.p[j], t.q[j], t.r[j], t.kappa[j])).collect())
    }

    /// Potential coefficients `pi_0..pi_{n-1}`.
    #[pyo3(signature = (n, precision=34))]
    fn potential(&self, n: usize, precision: u32) -> PyResult<Vec<f64>> {
        let prec = self::precision(precision);
        with_backend!(prec, R => {
            let t = self.inner.table::<R>(n, prec).map_err(err)?;
            Ok(chain::potential_scaled(&t, n).map_err(err)?.iter().map(|v| v.to_f64()).collect())
        })
    }

    fn to_toml(&self) -> String {
        specfile::chain_to_toml(&self.inner, None)
    }

    fn __repr__(&self) -> String {
        format!("Chain('{}')", self.inner.label)
    }
}

#[pyclass(name = "Weight", module = "rwlab_py", frozen)]
struct PyWeight {
    inner: WeightSpec,
}

#[pymethods]
impl PyWeight {
    /// Reference weight by name: semicircle, D, E, negative-mean.
    #[staticmethod]
    fn family(name: &str) -> PyResult<Self> {
        let inner = match name.to_ascii_lowercase().as_str() {
            "semicircle" => families::semicircle_weight(),
            "d" => families::weight_d(),
            "e" => families::weight_e(),
            "negative-mean" => families::negative_mean_weight(),
            other => return Err(RwlabError::new_err(format!("unknown weight family '{other}'"))),
        };
        Ok(PyWeight { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = specfile::parse_config(text).map_err(err)?;
        cfg.weight
            .map(|inner| PyWeight { inner })
            .ok_or_else(|| RwlabError::new_err("config has no [weight] table"))
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn to_toml(&self) -> String {
        specfile::weight_to_toml(&self.inner)
    }

    /// Discretized measure as `(nodes, weights)` on `grid` points.
    #[pyo3(signature = (grid=2400, precision=34))]
    fn discretize(&self, grid: usize, precision: u32) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let prec = self::precision(precision);
        with_backend!(prec, R => {
            let m = rwlab::weight::discretize_weight::<R>(&self.inner, grid, prec).map_err(err)?;
            Ok(split(&m))
        })
    }

    /// Chain whose first `n` states reproduce the weight's recurrence.
    #[pyo3(signature = (n, grid=2400, precision=34))]
    fn recover(&self, n: usize, grid: usize, precision: u32) -> PyResult<PyChain> {
        let prec = self::precision(precision);
        with_backend!(prec, R => {
            let m = rwlab::weight::discretize_weight::<R>(&self.inner, grid.max(12 * n), prec).map_err(err)?;
            let coeffs = recover::stieltjes_recurrence(&m, n).map_err(err)?;
            let chain = recover::chain_from_recurrence(&coeffs, &self.inner.label)
                .and_then(|r| r.into_result())
                .map_err(err)?;
            Ok(PyChain { inner: chain })
        })
    }

    fn __repr__(&self) -> String {
        format!("Weight('{}')", self.inner.label)
    }
}

fn split<R: Real>(m: &measure::DiscreteMeasure<R>) -> (Vec<f64>, Vec<f64>) {
    (
        m.nodes.iter().map(|x| x.to_f64()).collect(),
        m.weights.iter().map(|w| w.to_f64()).collect(),
    )
}

/// `Q_0(x)..Q_n(x)`.
#[pyfunction]
#[pyo3(signature = (chain, n, x, precision=34))]
fn eval_q(chain: &PyChain, n: usize, x: f64, precision: u32) -> PyResult<Vec<f64>> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let trace = polynomials::eval_q::<R>(&chain.inner, n, &R::from_f64(x, prec), prec).map_err(err)?;
        Ok(trace.values.iter().map(|v| v.value()).collect())
    })
}

/// `rho_n(x)`.
#[pyfunction]
#[pyo3(signature = (chain, n, x, precision=34))]
fn christoffel(chain: &PyChain, n: usize, x: f64, precision: u32) -> PyResult<f64> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        Ok(polynomials::christoffel::<R>(&chain.inner, n, &R::from_f64(x, prec), prec).map_err(err)?.to_f64())
    })
}

/// `rho_k(-eta)/rho_k(eta)` for `k = 1..=n_max`.
#[pyfunction]
#[pyo3(signature = (chain, n_max, eta, precision=34))]
fn christoffel_ratios(chain: &PyChain, n_max: usize, eta: f64, precision: u32) -> PyResult<Vec<f64>> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let s = polynomials::christoffel_ratio_sequence::<R>(&chain.inner, n_max, &R::from_f64(eta, prec), prec)
            .map_err(err)?;
        Ok(s.rho_ratio)
    })
}

/// Relative residual of the Christoffel-Darboux identity.
#[pyfunction]
#[pyo3(signature = (chain, n, x, y, precision=34))]
fn cd_residual(chain: &PyChain, n: usize, x: f64, y: f64, precision: u32) -> PyResult<f64> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        polynomials::cd_identity_residual::<R>(&chain.inner, n, &R::from_f64(x, prec), &R::from_f64(y, prec), prec)
            .map_err(err)
    })
}

/// Support edges as a dict.
#[pyfunction]
#[pyo3(signature = (chain, truncation=400, tol=1e-4, precision=34))]
fn support_edges(chain: &PyChain, truncation: usize, tol: f64, precision: u32) -> PyResult<HashMap<String, f64>> {
    let prec = self::precision(precision);
    let e = with_backend!(prec, R => polynomials::support_edges::<R>(&chain.inner, truncation, tol, prec).map_err(err)?);
    Ok(HashMap::from([
        ("eta".into(), e.eta_hat),
        ("zeta".into(), e.zeta_hat),
        ("eta_eigen".into(), e.eta_eigen),
        ("zeta_eigen".into(), e.zeta_eigen),
        ("eta_bisection".into(), e.eta_bisection),
        ("zeta_bisection".into(), e.zeta_bisection),
        ("discrepancy".into(), e.discrepancy),
    ]))
}

/// Gauss quadrature `(nodes, weights)` with `n` nodes.
#[pyfunction]
#[pyo3(signature = (chain, n, precision=34))]
fn quadrature(chain: &PyChain, n: usize, precision: u32) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let m = measure::quadrature_from_chain::<R>(&chain.inner, n, prec).map_err(err)?;
        Ok(split(&m))
    })
}

/// `C_0..C_{n_max}` of the `n`-node quadrature of the chain.
#[pyfunction]
#[pyo3(signature = (chain, n, n_max, precision=34))]
fn cn_series(chain: &PyChain, n: usize, n_max: usize, precision: u32) -> PyResult<Vec<f64>> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let m = measure::quadrature_from_chain::<R>(&chain.inner, n, prec).map_err(err)?;
        Ok(measure::cn_series(&m, n_max).map_err(err)?.iter().map(|c| c.value).collect())
    })
}

/// `(spectral, matrix)` values of `P_ij(n)` using an `quad_n`-node quadrature.
#[pyfunction]
#[pyo3(signature = (chain, i, j, n, quad_n=400, precision=34))]
fn transition(chain: &PyChain, i: usize, j: usize, n: usize, quad_n: usize, precision: u32) -> PyResult<(f64, f64)> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let q = measure::transition_probability::<R>(&chain.inner, i, j, n, quad_n, prec).map_err(err)?;
        Ok((q.value_spectral, q.value_matrix))
    })
}

/// `(estimate, std_error)` of `P_ij(n)` from simulated trajectories.
#[pyfunction]
#[pyo3(signature = (chain, i, j, n, samples=100_000, seed=1))]
fn monte_carlo_transition(chain: &PyChain, i: usize, j: usize, n: usize, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let e = montecarlo::monte_carlo_transition(&chain.inner, i, j, n, samples, seed).map_err(err)?;
    Ok((e.estimate, e.std_error))
}

/// Absorption probabilities `tau_0..tau_{j_max}`.
#[pyfunction]
#[pyo3(signature = (chain, j_max, n_trunc=2000, precision=34))]
fn absorption(chain: &PyChain, j_max: usize, n_trunc: usize, precision: u32) -> PyResult<Vec<f64>> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        Ok(polynomials::absorption_probabilities::<R>(&chain.inner, j_max, n_trunc, prec).map_err(err)?.tau)
    })
}

/// Normalized chain on states `0..=depth`.
#[pyfunction]
#[pyo3(signature = (chain, eta, depth=50, precision=34))]
fn normalize(chain: &PyChain, eta: f64, depth: usize, precision: u32) -> PyResult<PyChain> {
    let prec = self::precision(precision);
    with_backend!(prec, R => {
        let n = normalization::normalize::<R>(&chain.inner, &R::from_f64(eta, prec), depth, prec).map_err(err)?;
        Ok(PyChain { inner: n.chain })
    })
}

/// Verdict (`"diverges"`, `"converges"` or `"undecided"`) of a named series:
/// `L`, `aperiodicity`, `killing` or `r_over_p`.
#[pyfunction]
#[pyo3(signature = (chain, series, n=10_000, precision=34))]
fn series_verdict(chain: &PyChain, series: &str, n: usize, precision: u32) -> PyResult<String> {
    let prec = self::precision(precision);
    let c = &chain.inner;
    let v = with_backend!(prec, R => match series {
        "L" => chain::series_l::<R>(c, n, prec),
        "aperiodicity" => chain::asymptotic_aperiodicity_sum::<R>(c, n, prec),
        "killing" => chain::killing_sum::<R>(c, n, prec),
        "r_over_p" => chain::rj_over_pj_sum::<R>(c, n, prec),
        other => return Err(RwlabError::new_err(format!("unknown series '{other}'"))),
    })
    .map_err(err)?;
    Ok(v.verdict.to_string())
}

/// `(value, uncertainty)` of the limit of `seq`; `value` is `inf` for a
/// divergent sequence and `nan` for an oscillating one.
#[pyfunction]
fn estimate_limit(seq: Vec<f64>) -> PyResult<(f64, f64)> {
    let e = limits::estimate_limit(&seq).map_err(err)?;
    let v = match e.value {
        limits::LimitValue::Finite(v) => v,
        limits::LimitValue::Infinite => f64::INFINITY,
        limits::LimitValue::Oscillating => f64::NAN,
    };
    Ok((v, e.uncertainty))
}

#[pyclass(name = "Report", module = "rwlab_py", frozen)]
struct PyReport {
    inner: ConjectureReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn branch(&self) -> String {
        self.inner.branch.to_string()
    }

    #[getter]
    fn verdict(&self) -> String {
        self.inner.verdict.to_string()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    #[getter]
    fn lim_cn(&self) -> Option<f64> {
        self.inner.lim_cn.finite()
    }

    #[getter]
    fn lim_rho_ratio(&self) -> Option<f64> {
        self.inner.lim_rho_ratio.finite()
    }

    #[getter]
    fn predicted(&self) -> Option<f64> {
        self.inner.predicted
    }

    #[getter]
    fn cn(&self) -> Vec<f64> {
        self.inner.cn.clone()
    }

    #[getter]
    fn rho_ratio(&self) -> Vec<f64> {
        self.inner.rho_ratio.clone()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!("Report(branch={}, verdict={})", self.inner.branch, self.inner.verdict)
    }
}

/// Compare `lim C_n` with the Christoffel ratio limit for a chain, or for the
/// chain recovered from `weight` when one is given.
#[pyfunction]
#[pyo3(signature = (chain=None, weight=None, truncation=400, horizon=799, precision=34))]
fn conjecture(
    py: Python<'_>,
    chain: Option<&PyChain>,
    weight: Option<&PyWeight>,
    truncation: usize,
    horizon: usize,
    precision: u32,
) -> PyResult<PyReport> {
    let cfg = HarnessConfig {
        prec: self::precision(precision),
        truncation,
        horizon,
        ..HarnessConfig::default()
    };
    let w = weight.map(|w| w.inner.clone());
    let c = chain.map(|c| c.inner.clone());
    let prec = cfg.prec;
    let report = py.detach(|| {
        with_backend!(prec, R => {
            let c = match (c, &w) {
                (Some(c), _) => c,
                (None, Some(w)) => harness::weight_pipeline::<R>(w, truncation, cfg.grid, prec)?.0,
                (None, None) => return Err(rwlab::Error::InvalidInput("need a chain or a weight".into())),
            };
            harness::theorem_main_verdict::<R>(&c, w.as_ref(), &cfg)
        })
    });
    Ok(PyReport { inner: report.map_err(err)? })
}

#[pymodule]
fn rwlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RwlabError", m.py().get_type::<RwlabError>())?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyWeight>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(eval_q, m)?)?;
    m.add_function(wrap_pyfunction!(christoffel, m)?)?;
    m.add_function(wrap_pyfunction!(christoffel_ratios, m)?)?;
    m.add_function(wrap_pyfunction!(cd_residual, m)?)?;
    m.add_function(wrap_pyfunction!(support_edges, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(cn_series, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_transition, m)?)?;
    m.add_function(wrap_pyfunction!(absorption, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(series_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_limit, m)?)?;
    m.add_function(wrap_pyfunction!(conjecture, m)?)?;
    Ok(())
}
