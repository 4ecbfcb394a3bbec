//! Empirical characteristic functions and the heterogeneity test statistics.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::expansion::GaussianExpansion;
use crate::kernel::{cross_sum, within_sum};
use crate::regression::ResidualizedSample;
use crate::sample::{ExperimentSample, Theta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub fn modulus_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Empirical characteristic function of `values` at `t`.
pub fn ecf(values: &[f64], t: f64) -> Result<ComplexValue> {
    if values.is_empty() {
        return Err(Error::invalid("empirical characteristic function of an empty sample"));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for &v in values {
        let (s, c) = (t * v).sin_cos();
        re += c;
        im += s;
    }
    let m = values.len() as f64;
    Ok(ComplexValue { re: re / m, im: im / m })
}

/// `L_{n,theta}` from the two outcome groups.
pub fn l_theta_groups(treated: &[f64], control: &[f64], theta: Theta) -> f64 {
    let n1 = treated.len() as f64;
    let n0 = control.len() as f64;
    within_sum(treated, theta) / (n1 * n1) - within_sum(control, theta) / (n0 * n0)
}

/// Difference of the treated and control mean exp-kernels of within-group
/// outcome differences. Depends only on within-group differences, so it is
/// free of the average treatment effect.
pub fn l_theta_stat(sample: &ExperimentSample, theta: Theta) -> f64 {
    l_theta_groups(&sample.group(true), &sample.group(false), theta)
}

/// Two-sample ECF distance with the control group shifted by `tau`:
/// `A + B - 2C` where `C` pairs each control value plus `tau` with each
/// treated value.
pub fn hkz_groups(treated: &[f64], control: &[f64], tau: f64, theta: Theta) -> f64 {
    let n1 = treated.len() as f64;
    let n0 = control.len() as f64;
    within_sum(control, theta) / (n0 * n0) + within_sum(treated, theta) / (n1 * n1)
        - 2.0 * cross_sum(control, treated, tau, theta) / (n0 * n1)
}

/// Location-shift statistic with the plug-in effect estimate `tau_hat`.
pub fn hkz_stat(sample: &ExperimentSample, tau_hat: f64, theta: Theta) -> f64 {
    hkz_groups(&sample.group(true), &sample.group(false), tau_hat, theta)
}

/// Squared weighted ECF distance between treated and control residuals.
pub fn d_theta_groups(treated: &[f64], control: &[f64], theta: Theta) -> f64 {
    hkz_groups(treated, control, 0.0, theta)
}

pub fn d_theta_stat(resid: &ResidualizedSample, theta: Theta) -> f64 {
    let (treated, control) = resid.groups();
    d_theta_groups(&treated, &control, theta)
}

/// Same quantity as [`hkz_groups`] for `theta = 2`, with the kernel sums
/// done by moment expansion in `O(n)` instead of `O(n^2)` exponentials.
/// Agrees with the direct sums to roughly `1e-14` relative.
pub(crate) fn hkz_groups_gaussian_fast(treated: &[f64], control: &[f64], tau: f64) -> f64 {
    let n1 = treated.len() as f64;
    let n0 = control.len() as f64;
    let gt = GaussianExpansion::new(treated);
    let gc = GaussianExpansion::new(control);
    gc.sum_over(control, 0.0) / (n0 * n0) + gt.sum_over(treated, 0.0) / (n1 * n1)
        - 2.0 * gt.sum_over(control, tau) / (n0 * n1)
}

/// Difference-in-means estimate of the average treatment effect.
pub fn diff_in_means(sample: &ExperimentSample) -> f64 {
    mean(&sample.group(true)) - mean(&sample.group(false))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Variance estimate for the studentized `L_{n,theta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub zeta_hat: f64,
    pub r2_treated: f64,
    pub r2_control: f64,
    pub r3_treated: f64,
    pub r3_control: f64,
    /// Population `zeta`, when known from a design (never estimated here).
    pub population_zeta: Option<f64>,
    /// Population mean of the statistic, when known (never estimated here).
    pub population_mean: Option<f64>,
}

/// Order-2 and order-3 U-statistics of one group: `R2` averages
/// `h(y_j, y_l)` over `j < l`; `R3` averages `h(y_j, y_l) h(y_j, y_k)` over
/// `j < l < k`, with `j` the smallest index as written.
pub(crate) fn u_statistics(values: &[f64], theta: Theta) -> (f64, f64) {
    let m = values.len();
    let mut pair_sum = 0.0;
    let mut triple_sum = 0.0;
    for j in 0..m {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for &v in &values[j + 1..] {
            let h = theta.kernel(values[j] - v);
            s += h;
            s2 += h * h;
        }
        pair_sum += s;
        // sum over l < k, both after j, of h_jl * h_jk
        triple_sum += 0.5 * (s * s - s2);
    }
    let mf = m as f64;
    let pairs = mf * (mf - 1.0) / 2.0;
    let triples = mf * (mf - 1.0) * (mf - 2.0) / 6.0;
    (pair_sum / pairs, triple_sum / triples)
}

/// Consistent estimate of the asymptotic variance component `zeta`.
pub fn zeta_hat(sample: &ExperimentSample, theta: Theta) -> Result<VarianceEstimate> {
    let (n1, n0) = (sample.n_treated(), sample.n_control());
    if n1 < 3 || n0 < 3 {
        return Err(Error::precondition(format!(
            "zeta_hat needs at least 3 units per group (n1 = {n1}, n0 = {n0})"
        )));
    }
    let n = sample.len() as f64;
    let (r2_treated, r3_treated) = u_statistics(&sample.group(true), theta);
    let (r2_control, r3_control) = u_statistics(&sample.group(false), theta);
    let zeta_hat = (1.0 - n1 as f64 / n) * (r3_treated - r2_treated * r2_treated)
        + (1.0 - n0 as f64 / n) * (r3_control - r2_control * r2_control);
    Ok(VarianceEstimate {
        zeta_hat,
        r2_treated,
        r2_control,
        r3_treated,
        r3_control,
        population_zeta: None,
        population_mean: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TStatResult {
    pub statistic: f64,
    pub z: f64,
    pub p_value: f64,
    pub variance: VarianceEstimate,
}

/// Two-sided normal test of `L_{n,theta} = mu0` studentized by `zeta_hat`.
pub fn t_stat_test(sample: &ExperimentSample, theta: Theta, mu0: f64) -> Result<TStatResult> {
    let variance = zeta_hat(sample, theta)?;
    if !(variance.zeta_hat > 0.0) {
        return Err(Error::DegenerateVariance(variance.zeta_hat));
    }
    let n = sample.len() as f64;
    let n1 = sample.n_treated() as f64;
    let n0 = sample.n_control() as f64;
    let statistic = l_theta_stat(sample, theta);
    let z = (statistic - mu0) / (2.0 * (variance.zeta_hat * n / (n0 * n1)).sqrt());
    Ok(TStatResult { statistic, z, p_value: normal_two_sided_p(z), variance })
}

/// `P(Z <= z)` for a standard normal `Z`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(|Z| >= |z|)` for a standard normal `Z`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}
