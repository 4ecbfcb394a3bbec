//! Python bindings: samples, the test statistics, the resampling tests and
//! the simulation designs.

use hetfx::{
    Covariates, DgpConfig, Family, Method, NWConfig, ResamplingPlan, ResidualMethod, ShiftMode, StatisticKind,
    Theta, Variation,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: hetfx::Error) -> PyErr {
    match e {
        hetfx::Error::DegenerateSample(_) | hetfx::Error::DegenerateVariance(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn theta(value: f64) -> PyResult<Theta> {
    Theta::new(value).map_err(to_py)
}

fn parse<T: Copy>(name: &str, what: &str, options: &[T], label: impl Fn(T) -> &'static str) -> PyResult<T> {
    options.iter().copied().find(|&o| label(o) == name).ok_or_else(|| {
        let known: Vec<_> = options.iter().map(|&o| label(o)).collect();
        PyValueError::new_err(format!("unknown {what} {name:?}; expected one of {}", known.join(", ")))
    })
}

fn residual_method(name: &str) -> PyResult<ResidualMethod> {
    use ResidualMethod::*;
    parse(name, "residualization", &[LinearInteraction, NadarayaWatson, GroupMean], ResidualMethod::as_str)
}

/// Outcomes, binary treatments and optional covariate rows.
#[pyclass(name = "ExperimentSample", module = "hetfx_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySample {
    inner: hetfx::ExperimentSample,
}

#[pymethods]
impl PySample {
    #[new]
    #[pyo3(signature = (outcomes, treatments, covariates=None))]
    fn new(outcomes: Vec<f64>, treatments: Vec<bool>, covariates: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let inner = match covariates {
            None => hetfx::ExperimentSample::new(outcomes, treatments),
            Some(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return Err(PyValueError::new_err("covariate rows must have equal length"));
                }
                let n = rows.len();
                Covariates::from_row_major(n, cols, rows.concat())
                    .and_then(|x| hetfx::ExperimentSample::with_covariates(outcomes, treatments, x))
            }
        }
        .map_err(to_py)?;
        Ok(PySample { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn n_treated(&self) -> usize {
        self.inner.n_treated()
    }

    #[getter]
    fn outcomes(&self) -> Vec<f64> {
        self.inner.outcomes().to_vec()
    }

    #[getter]
    fn treatments(&self) -> Vec<bool> {
        self.inner.treatments().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("ExperimentSample(n={}, n_treated={})", self.inner.len(), self.inner.n_treated())
    }
}

/// Result of a resampling or normal-approximation test.
#[pyclass(name = "TestReport", module = "hetfx_py", frozen, get_all)]
pub struct PyReport {
    statistic: &'static str,
    method: &'static str,
    theta: f64,
    observed: f64,
    ecp: f64,
    p_value: f64,
    reject: bool,
    alpha: f64,
    replicates: usize,
    seed: u64,
    tau: Option<f64>,
    tau_grid: Option<Vec<f64>>,
    grid_p_values: Option<Vec<f64>>,
    zero_variance: bool,
    reference_mean: f64,
    reference_sd: f64,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "TestReport({}/{}, observed={:.6}, p_value={:.4}, reject={})",
            self.statistic, self.method, self.observed, self.p_value, self.reject
        )
    }
}

#[pyfunction]
#[pyo3(signature = (sample, theta=2.0))]
fn l_theta_stat(sample: &PySample, theta: f64) -> PyResult<f64> {
    Ok(hetfx::l_theta_stat(&sample.inner, self::theta(theta)?))
}

/// HKZ statistic; `tau_hat` defaults to the difference in means.
#[pyfunction]
#[pyo3(signature = (sample, theta=2.0, tau_hat=None))]
fn hkz_stat(sample: &PySample, theta: f64, tau_hat: Option<f64>) -> PyResult<f64> {
    let tau = tau_hat.unwrap_or_else(|| hetfx::diff_in_means(&sample.inner));
    Ok(hetfx::hkz_stat(&sample.inner, tau, self::theta(theta)?))
}

#[pyfunction]
#[pyo3(signature = (sample, theta=2.0, residualization="linear_interaction"))]
fn d_theta_stat(sample: &PySample, theta: f64, residualization: &str) -> PyResult<f64> {
    let resid = residualize_sample(&sample.inner, residual_method(residualization)?)?;
    Ok(hetfx::d_theta_stat(&resid, self::theta(theta)?))
}

#[pyfunction]
fn diff_in_means(sample: &PySample) -> f64 {
    hetfx::diff_in_means(&sample.inner)
}

#[pyfunction]
#[pyo3(signature = (sample, theta=2.0))]
fn zeta_hat(sample: &PySample, theta: f64) -> PyResult<f64> {
    Ok(hetfx::zeta_hat(&sample.inner, self::theta(theta)?).map_err(to_py)?.zeta_hat)
}

/// Studentized test of a zero mean; returns (statistic, z, p_value).
#[pyfunction]
#[pyo3(signature = (sample, theta=2.0))]
fn t_stat_test(sample: &PySample, theta: f64) -> PyResult<(f64, f64, f64)> {
    let t = hetfx::t_stat_test(&sample.inner, self::theta(theta)?, 0.0).map_err(to_py)?;
    Ok((t.statistic, t.z, t.p_value))
}

#[pyfunction]
#[pyo3(signature = (sample, level=0.999))]
fn welch_ci(sample: &PySample, level: f64) -> PyResult<(f64, f64)> {
    hetfx::welch_ci(&sample.inner, level).map_err(to_py)
}

fn residualize_sample(sample: &hetfx::ExperimentSample, method: ResidualMethod) -> PyResult<hetfx::ResidualizedSample> {
    match method {
        ResidualMethod::LinearInteraction => hetfx::residualize_linear(sample),
        ResidualMethod::NadarayaWatson => hetfx::residualize_nw(sample, &NWConfig::default()),
        ResidualMethod::GroupMean => hetfx::residualize_group_mean(sample),
    }
    .map_err(to_py)
}

/// Residuals of the outcome on the covariates, fitted within each group.
#[pyfunction]
#[pyo3(signature = (sample, method="linear_interaction"))]
fn residualize(sample: &PySample, method: &str) -> PyResult<Vec<f64>> {
    Ok(residualize_sample(&sample.inner, residual_method(method)?)?.residuals().to_vec())
}

#[pyfunction]
#[pyo3(signature = (
    sample, statistic="l_theta", method=None, theta=2.0, B=2000, seed=0, alpha=0.05, m=21,
    ci_level=0.999, residualization="linear_interaction", shift="coefficient_sum"
))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn run_test(
    py: Python<'_>,
    sample: &PySample,
    statistic: &str,
    method: Option<&str>,
    theta: f64,
    B: usize,
    seed: u64,
    alpha: f64,
    m: usize,
    ci_level: f64,
    residualization: &str,
    shift: &str,
) -> PyResult<PyReport> {
    use StatisticKind::*;
    let kind = parse(statistic, "statistic", &[LTheta, Hkz, DTheta, TStat], StatisticKind::as_str)?;
    let method = match method {
        Some(name) => parse(
            name,
            "method",
            &[Method::Bootstrap, Method::Permutation, Method::CiPermutation, Method::CovariatePermutation],
            Method::as_str,
        )?,
        None if kind == DTheta => Method::CovariatePermutation,
        None => Method::Permutation,
    };
    let mut plan = ResamplingPlan::new(method, B, seed).with_alpha(alpha).with_grid(m, ci_level);
    plan.residualization = residual_method(residualization)?;
    plan.shift_mode = match shift {
        "coefficient_sum" => ShiftMode::CoefficientSum,
        "unit_specific" => ShiftMode::UnitSpecific,
        other => return Err(PyValueError::new_err(format!("unknown shift {other:?}"))),
    };
    let theta = self::theta(theta)?;
    let r = py
        .detach(|| hetfx::run_test(&sample.inner, kind, theta, &plan))
        .map_err(to_py)?;
    Ok(PyReport {
        statistic: r.statistic.as_str(),
        method: if kind == TStat { "normal" } else { r.method.as_str() },
        theta: r.theta,
        observed: r.observed,
        ecp: r.ecp,
        p_value: r.p_value,
        reject: r.reject,
        alpha: r.alpha,
        replicates: r.replicates,
        seed: r.seed,
        tau: r.tau,
        tau_grid: r.tau_grid,
        grid_p_values: r.grid_p_values,
        zero_variance: r.diagnostics.zero_variance,
        reference_mean: r.diagnostics.mean,
        reference_sd: r.diagnostics.sd,
    })
}

/// Draws a sample from one of the simulation designs. `family` is
/// exponential, lognormal, normal, t5 or covariate_linear.
#[pyfunction]
#[pyo3(signature = (family, n, sigma_tau=0.0, seed=0, systematic=false, idiosyncratic=false))]
fn generate(
    family: &str,
    n: usize,
    sigma_tau: f64,
    seed: u64,
    systematic: bool,
    idiosyncratic: bool,
) -> PyResult<PySample> {
    let family: Family = family.parse().map_err(to_py)?;
    let config = if family == Family::CovariateLinear {
        DgpConfig::cov(n, Variation { systematic, idiosyncratic }, seed)
    } else {
        DgpConfig::nocov(family, n, sigma_tau, seed)
    };
    Ok(PySample { inner: hetfx::simulation::generate(&config).map_err(to_py)? })
}

/// Rejection rates of one test over a design, as a dict per cell.
#[pyfunction]
#[pyo3(signature = (family, n, statistic, method, reps=1000, B=2000, seed=0, sigma_tau=0.0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn rejection_rate<'py>(
    py: Python<'py>,
    family: &str,
    n: usize,
    statistic: &str,
    method: &str,
    reps: usize,
    B: usize,
    seed: u64,
    sigma_tau: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    use StatisticKind::*;
    let family: Family = family.parse().map_err(to_py)?;
    let grid: Vec<DgpConfig> = if family == Family::CovariateLinear {
        Variation::ALL.iter().map(|&v| DgpConfig::cov(n, v, 0)).collect()
    } else {
        vec![DgpConfig::nocov(family, n, sigma_tau, 0)]
    };
    let kind = parse(statistic, "statistic", &[LTheta, Hkz, DTheta, TStat], StatisticKind::as_str)?;
    let method = parse(
        method,
        "method",
        &[Method::Bootstrap, Method::Permutation, Method::CiPermutation, Method::CovariatePermutation],
        Method::as_str,
    )?;
    let tests = [hetfx::TestSpec::new(kind, method, B)];
    let result = py.detach(|| hetfx::run_size_power(&grid, &tests, reps, seed)).map_err(to_py)?;
    result
        .cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("test", &c.test)?;
            d.set_item("family", c.family.as_str())?;
            d.set_item("n", c.n)?;
            d.set_item("sigma_tau", c.sigma_tau)?;
            d.set_item("systematic", c.systematic)?;
            d.set_item("idiosyncratic", c.idiosyncratic)?;
            d.set_item("replications", c.replications)?;
            d.set_item("rejection_rate", c.rejection_rate)?;
            d.set_item("mc_se", c.mc_se)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn hetfx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(l_theta_stat, m)?)?;
    m.add_function(wrap_pyfunction!(hkz_stat, m)?)?;
    m.add_function(wrap_pyfunction!(d_theta_stat, m)?)?;
    m.add_function(wrap_pyfunction!(diff_in_means, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_hat, m)?)?;
    m.add_function(wrap_pyfunction!(t_stat_test, m)?)?;
    m.add_function(wrap_pyfunction!(welch_ci, m)?)?;
    m.add_function(wrap_pyfunction!(residualize, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(rejection_rate, m)?)?;
    Ok(())
}
