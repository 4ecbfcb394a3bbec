use rayon::prelude::*;

use super::assign::draw_split;
use super::{align, distance_stat, verdict, GroupSums, Method, ResamplingPlan, StatisticKind, TestReport};
use crate::error::Result;
use crate::rng::stream_rng;
use crate::sample::{ExperimentSample, Theta};
use crate::stats::{diff_in_means, hkz_stat, l_theta_stat, mean};

/// `L` on `B` random reassignments of fixed outcomes.
pub(crate) fn l_reference(values: &[f64], n1: usize, theta: Theta, b: usize, seed: u64) -> Vec<f64> {
    let sums = GroupSums::new(values, theta);
    let n = values.len();
    (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let (mut t, mut c) = (Vec::with_capacity(n1), Vec::with_capacity(n - n1));
            draw_split(n, n1, &mut rng, &mut t, &mut c);
            sums.l_stat(&t, &c)
        })
        .collect()
}

/// Location-shift statistic, with the effect re-estimated, on `B` random
/// reassignments of fixed outcomes.
pub(crate) fn hkz_reference(values: &[f64], n1: usize, theta: Theta, b: usize, seed: u64) -> Vec<f64> {
    let n = values.len();
    (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let (mut ti, mut ci) = (Vec::with_capacity(n1), Vec::with_capacity(n - n1));
            draw_split(n, n1, &mut rng, &mut ti, &mut ci);
            let t: Vec<f64> = ti.iter().map(|&i| values[i]).collect();
            let c: Vec<f64> = ci.iter().map(|&i| values[i]).collect();
            distance_stat(&t, &c, mean(&t) - mean(&c), theta)
        })
        .collect()
}

/// Permutation test of `L_{n,theta}`: control outcomes are moved by `tau`
/// (the difference in means when `None`), assignments with the observed
/// number of treated units are redrawn, and the observed statistic is
/// compared with both tails of the permutation distribution.
pub fn permutation_test_l(
    sample: &ExperimentSample,
    theta: Theta,
    plan: &ResamplingPlan,
    tau: Option<f64>,
) -> Result<TestReport> {
    plan.expect_method(Method::Permutation)?;
    let tau = tau.unwrap_or_else(|| diff_in_means(sample));
    let observed = l_theta_stat(sample, theta);
    let reference = l_reference(&align(sample, tau), sample.n_treated(), theta, plan.replicates, plan.seed);
    let v = verdict(observed, &reference, StatisticKind::LTheta.tail(), plan.alpha);
    Ok(TestReport {
        statistic: StatisticKind::LTheta,
        method: Method::Permutation,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value: v.p_value,
        reject: v.reject,
        alpha: plan.alpha,
        replicates: plan.replicates,
        seed: plan.seed,
        tau: Some(tau),
        tau_grid: None,
        grid_p_values: None,
        ci_level: None,
        residualization: None,
        diagnostics: v.diagnostics,
    })
}

/// Permutation test of the location-shift statistic on outcomes aligned by
/// the difference in means; upper tail.
pub fn permutation_test_hkz(
    sample: &ExperimentSample,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    plan.expect_method(Method::Permutation)?;
    let tau = diff_in_means(sample);
    let observed = hkz_stat(sample, tau, theta);
    let reference = hkz_reference(&align(sample, tau), sample.n_treated(), theta, plan.replicates, plan.seed);
    let v = verdict(observed, &reference, StatisticKind::Hkz.tail(), plan.alpha);
    Ok(TestReport {
        statistic: StatisticKind::Hkz,
        method: Method::Permutation,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value: v.p_value,
        reject: v.reject,
        alpha: plan.alpha,
        replicates: plan.replicates,
        seed: plan.seed,
        tau: Some(tau),
        tau_grid: None,
        grid_p_values: None,
        ci_level: None,
        residualization: None,
        diagnostics: v.diagnostics,
    })
}
