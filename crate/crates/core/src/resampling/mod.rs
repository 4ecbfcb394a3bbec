//! Resampling calibration of the heterogeneity statistics.

mod assign;
mod bootstrap;
mod ci;
mod covariate;
mod permutation;

pub use assign::assignment_sampler;
pub use bootstrap::{bootstrap_test_hkz, bootstrap_test_l};
pub use ci::{ci_permutation_test, welch_ci};
pub use covariate::covariate_permutation_test;
pub use permutation::{permutation_test_hkz, permutation_test_l};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{within_sum, KernelMatrix};
use crate::regression::ResidualMethod;
use crate::sample::{ExperimentSample, Theta};
use crate::stats::{hkz_groups, hkz_groups_gaussian_fast, normal_cdf, t_stat_test};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bootstrap,
    Permutation,
    CiPermutation,
    CovariatePermutation,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bootstrap => "boot",
            Method::Permutation => "perm",
            Method::CiPermutation => "ciperm",
            Method::CovariatePermutation => "covperm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    LTheta,
    Hkz,
    DTheta,
    TStat,
}

impl StatisticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::LTheta => "l_theta",
            StatisticKind::Hkz => "hkz",
            StatisticKind::DTheta => "d_theta",
            StatisticKind::TStat => "tstat",
        }
    }

    /// `L` is tested in both tails; the distance-type statistics only in
    /// the upper tail.
    pub fn tail(self) -> Tail {
        match self {
            StatisticKind::LTheta | StatisticKind::TStat => Tail::TwoSided,
            StatisticKind::Hkz | StatisticKind::DTheta => Tail::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    TwoSided,
    Upper,
}

/// How the covariate permutation moves outcomes when a unit's treatment
/// label changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// One scalar for every unit: the sum of the coefficients on `(D, D X')`.
    #[default]
    CoefficientSum,
    /// Unit-specific effect `(1, X_i') beta_{(D, D X')}`.
    UnitSpecific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    pub method: Method,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub grid_size: usize,
    pub ci_level: f64,
    pub shift_mode: ShiftMode,
    pub residualization: ResidualMethod,
}

impl ResamplingPlan {
    pub fn new(method: Method, replicates: usize, seed: u64) -> Self {
        ResamplingPlan {
            method,
            replicates,
            seed,
            alpha: 0.05,
            grid_size: 21,
            ci_level: 0.999,
            shift_mode: ShiftMode::default(),
            residualization: ResidualMethod::LinearInteraction,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_grid(mut self, grid_size: usize, ci_level: f64) -> Self {
        self.grid_size = grid_size;
        self.ci_level = ci_level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::invalid(format!(
                "at least 100 replicates are required, got {}",
                self.replicates
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.method == Method::CiPermutation {
            if self.grid_size == 0 {
                return Err(Error::invalid("the confidence grid needs at least one point"));
            }
            if !(self.ci_level > 0.99 && self.ci_level < 1.0) {
                return Err(Error::invalid(format!(
                    "ci_level must lie in (0.99, 1), got {}",
                    self.ci_level
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn expect_method(&self, method: Method) -> Result<()> {
        self.validate()?;
        if self.method != method {
            return Err(Error::invalid(format!(
                "plan method is {}, expected {}",
                self.method.as_str(),
                method.as_str()
            )));
        }
        Ok(())
    }
}

/// Summary of the reference distribution the observed statistic was
/// compared with.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q050: f64,
    pub q500: f64,
    pub q950: f64,
    pub q975: f64,
    /// Every reference value is identical.
    pub zero_variance: bool,
    /// Bootstrap draws discarded because a group came out empty.
    pub redraws: usize,
    /// Kernel-regression evaluations that fell back to the training mean.
    pub nw_fallbacks: usize,
}

impl Diagnostics {
    pub(crate) fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Diagnostics::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let b = values.len() as f64;
        let mean = values.iter().sum::<f64>() / b;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1.0)
        } else {
            0.0
        };
        Diagnostics {
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            mean,
            sd: var.sqrt(),
            q025: order_quantile(&sorted, 0.025),
            q050: order_quantile(&sorted, 0.05),
            q500: order_quantile(&sorted, 0.5),
            q950: order_quantile(&sorted, 0.95),
            q975: order_quantile(&sorted, 0.975),
            zero_variance: sorted[0] == sorted[sorted.len() - 1],
            redraws: 0,
            nw_fallbacks: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: StatisticKind,
    pub method: Method,
    pub theta: f64,
    pub observed: f64,
    /// Share of reference values at or below the observed statistic.
    pub ecp: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Effect used to align the control outcomes.
    pub tau: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub grid_p_values: Option<Vec<f64>>,
    pub ci_level: Option<f64>,
    pub residualization: Option<ResidualMethod>,
    pub diagnostics: Diagnostics,
}

/// The `q`-quantile of sorted values: order statistic `ceil(q * B)`.
pub fn order_quantile(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let k = ((q * b as f64).ceil() as usize).clamp(1, b);
    sorted[k - 1]
}

/// Quantile-rule decision: two-sided rejects outside
/// `[q(alpha/2), q(1 - alpha/2)]`, upper rejects above `q(1 - alpha)`.
pub fn quantile_reject(observed: f64, reference: &[f64], tail: Tail, alpha: f64) -> bool {
    let mut sorted = reference.to_vec();
    sorted.sort_by(f64::total_cmp);
    match tail {
        Tail::TwoSided => {
            observed < order_quantile(&sorted, alpha / 2.0)
                || observed > order_quantile(&sorted, 1.0 - alpha / 2.0)
        }
        Tail::Upper => observed > order_quantile(&sorted, 1.0 - alpha),
    }
}

/// Decision from a reported empirical cumulative probability, as used for
/// tables of ECPs: two-sided rejects below `alpha/2` or above
/// `1 - alpha/2`, upper rejects above `1 - alpha`.
pub fn ecp_reject(ecp: f64, tail: Tail, alpha: f64) -> bool {
    match tail {
        Tail::TwoSided => ecp < alpha / 2.0 || ecp > 1.0 - alpha / 2.0,
        Tail::Upper => ecp > 1.0 - alpha,
    }
}

/// `#{reference <= observed} / B`.
pub fn ecp(observed: f64, reference: &[f64]) -> f64 {
    reference.iter().filter(|&&v| v <= observed).count() as f64 / reference.len() as f64
}

/// Resampling p-value. Upper: `(1 + #{>= obs}) / (B + 1)`. Two-sided:
/// `2 min(#{<= obs}, #{>= obs}) / B`, clipped to `[1/(B+1), 1]`; this is
/// `2 min(ECP, 1 - ECP)` when no reference value ties the observed one.
pub fn p_value(observed: f64, reference: &[f64], tail: Tail) -> f64 {
    let b = reference.len() as f64;
    let ge = reference.iter().filter(|&&v| v >= observed).count() as f64;
    match tail {
        Tail::Upper => (1.0 + ge) / (b + 1.0),
        Tail::TwoSided => {
            let le = reference.iter().filter(|&&v| v <= observed).count() as f64;
            (2.0 * le.min(ge) / b).clamp(1.0 / (b + 1.0), 1.0)
        }
    }
}

pub(crate) struct Verdict {
    pub ecp: f64,
    pub p_value: f64,
    pub reject: bool,
    pub diagnostics: Diagnostics,
}

pub(crate) fn verdict(observed: f64, reference: &[f64], tail: Tail, alpha: f64) -> Verdict {
    Verdict {
        ecp: ecp(observed, reference),
        p_value: p_value(observed, reference, tail),
        reject: quantile_reject(observed, reference, tail, alpha),
        diagnostics: Diagnostics::from_values(reference),
    }
}

/// Above this many units the dense kernel matrix (8 n^2 bytes) is skipped
/// and group sums are recomputed directly.
const MATRIX_LIMIT: usize = 4096;

/// Within-group kernel sums over index subsets of one fixed outcome vector.
pub(crate) enum GroupSums<'a> {
    Matrix(KernelMatrix),
    Direct { values: &'a [f64], theta: Theta },
}

impl<'a> GroupSums<'a> {
    pub fn new(values: &'a [f64], theta: Theta) -> Self {
        if values.len() <= MATRIX_LIMIT {
            GroupSums::Matrix(KernelMatrix::new(values, theta))
        } else {
            GroupSums::Direct { values, theta }
        }
    }

    pub fn within(&self, idx: &[usize]) -> f64 {
        match self {
            GroupSums::Matrix(km) => km.within_sum(idx),
            GroupSums::Direct { values, theta } => {
                let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                within_sum(&v, *theta)
            }
        }
    }

    pub fn weighted_within(&self, idx: &[usize], counts: &[u32]) -> f64 {
        match self {
            GroupSums::Matrix(km) => km.weighted_within_sum(idx, counts),
            GroupSums::Direct { values, theta } => {
                let v: Vec<f64> = idx
                    .iter()
                    .zip(counts)
                    .flat_map(|(&i, &c)| std::iter::repeat_n(values[i], c as usize))
                    .collect();
                within_sum(&v, *theta)
            }
        }
    }

    /// `L` for the assignment whose treated and control units are listed.
    pub fn l_stat(&self, treated: &[usize], control: &[usize]) -> f64 {
        let n1 = treated.len() as f64;
        let n0 = control.len() as f64;
        self.within(treated) / (n1 * n1) - self.within(control) / (n0 * n0)
    }
}

/// From this size on the Gaussian-kernel distance uses the moment expansion.
const FAST_DISTANCE_MIN: usize = 256;

/// Distance statistic between two groups with the control group shifted by
/// `tau`; the Gaussian case switches to the `O(n)` expansion for large
/// samples.
pub(crate) fn distance_stat(treated: &[f64], control: &[f64], tau: f64, theta: Theta) -> f64 {
    if theta == Theta::NORMAL && treated.len() + control.len() >= FAST_DISTANCE_MIN {
        hkz_groups_gaussian_fast(treated, control, tau)
    } else {
        hkz_groups(treated, control, tau, theta)
    }
}

/// `Y + tau (1 - D)`: control outcomes moved by the effect under test.
pub(crate) fn align(sample: &ExperimentSample, tau: f64) -> Vec<f64> {
    sample
        .outcomes()
        .iter()
        .zip(sample.treatments())
        .map(|(&y, &d)| if d { y } else { y + tau })
        .collect()
}

/// Runs the test selected by `kind` and `plan.method`.
///
/// `TStat` ignores the plan's resampling fields and uses the normal
/// approximation; `DTheta` is only calibrated by covariate permutation.
pub fn run_test(
    sample: &ExperimentSample,
    kind: StatisticKind,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    use Method::*;
    use StatisticKind::*;
    match (kind, plan.method) {
        (TStat, _) => {
            if !(plan.alpha > 0.0 && plan.alpha < 1.0) {
                return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", plan.alpha)));
            }
            let t = t_stat_test(sample, theta, 0.0)?;
            Ok(TestReport {
                statistic: TStat,
                method: plan.method,
                theta: theta.value(),
                observed: t.statistic,
                ecp: normal_cdf(t.z),
                p_value: t.p_value,
                reject: t.p_value <= plan.alpha,
                alpha: plan.alpha,
                replicates: 0,
                seed: plan.seed,
                tau: None,
                tau_grid: None,
                grid_p_values: None,
                ci_level: None,
                residualization: None,
                diagnostics: Diagnostics { mean: t.z, ..Diagnostics::default() },
            })
        }
        (LTheta, Bootstrap) => bootstrap_test_l(sample, theta, plan),
        (Hkz, Bootstrap) => bootstrap_test_hkz(sample, theta, plan),
        (LTheta, Permutation) => permutation_test_l(sample, theta, plan, None),
        (Hkz, Permutation) => permutation_test_hkz(sample, theta, plan),
        (LTheta | Hkz, CiPermutation) => ci_permutation_test(sample, kind, theta, plan),
        (DTheta, CovariatePermutation) => covariate_permutation_test(sample, theta, plan),
        (DTheta, m) => Err(Error::invalid(format!(
            "d_theta is calibrated by covariate permutation, not {}",
            m.as_str()
        ))),
        (k, CovariatePermutation) => Err(Error::invalid(format!(
            "covariate permutation applies to d_theta, not {}",
            k.as_str()
        ))),
    }
}
