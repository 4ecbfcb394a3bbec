use rand::Rng;
use rayon::prelude::*;

use super::assign::draw_split;
use super::{align, distance_stat, verdict, GroupSums, Method, ResamplingPlan, StatisticKind, TestReport};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sample::{ExperimentSample, Theta};
use crate::stats::{diff_in_means, hkz_stat, l_theta_stat, mean};

/// Recentered pairs bootstrap of `L_{n,theta}`.
///
/// Each replicate draws `n` units with replacement, keeping each unit's
/// treatment label; draws in which a group comes out empty are discarded
/// and redrawn. The reference distribution is `L* - L_obs`, and the test is
/// two-sided.
pub fn bootstrap_test_l(
    sample: &ExperimentSample,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    plan.expect_method(Method::Bootstrap)?;
    let n = sample.len();
    let b = plan.replicates;
    let observed = l_theta_stat(sample, theta);
    let sums = GroupSums::new(sample.outcomes(), theta);
    let d = sample.treatments();

    let draws: Vec<(f64, usize)> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(plan.seed, r as u64);
            let mut counts = vec![0u32; n];
            let mut redraws = 0;
            loop {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                let n1: u32 = (0..n).filter(|&i| d[i]).map(|i| counts[i]).sum();
                if n1 > 0 && (n1 as usize) < n {
                    break;
                }
                redraws += 1;
                if redraws >= 10 * b {
                    return Err(Error::DegenerateSample(format!(
                        "{redraws} consecutive bootstrap draws left a group empty"
                    )));
                }
            }
            let mut t_idx = Vec::new();
            let mut t_cnt = Vec::new();
            let mut c_idx = Vec::new();
            let mut c_cnt = Vec::new();
            for i in (0..n).filter(|&i| counts[i] > 0) {
                if d[i] {
                    t_idx.push(i);
                    t_cnt.push(counts[i]);
                } else {
                    c_idx.push(i);
                    c_cnt.push(counts[i]);
                }
            }
            let n1 = f64::from(t_cnt.iter().sum::<u32>());
            let n0 = f64::from(c_cnt.iter().sum::<u32>());
            let l = sums.weighted_within(&t_idx, &t_cnt) / (n1 * n1)
                - sums.weighted_within(&c_idx, &c_cnt) / (n0 * n0);
            Ok((l - observed, redraws))
        })
        .collect::<Result<_>>()?;

    let reference: Vec<f64> = draws.iter().map(|x| x.0).collect();
    let mut v = verdict(observed, &reference, StatisticKind::LTheta.tail(), plan.alpha);
    v.diagnostics.redraws = draws.iter().map(|x| x.1).sum();
    Ok(TestReport {
        statistic: StatisticKind::LTheta,
        method: Method::Bootstrap,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value: v.p_value,
        reject: v.reject,
        alpha: plan.alpha,
        replicates: b,
        seed: plan.seed,
        tau: None,
        tau_grid: None,
        grid_p_values: None,
        ci_level: None,
        residualization: None,
        diagnostics: v.diagnostics,
    })
}

/// Bootstrap of the location-shift statistic: control outcomes are aligned
/// by the difference in means, `n` aligned outcomes are drawn with
/// replacement, and a fresh assignment with the original group sizes is
/// drawn. The effect estimate is recomputed on every replicate. Upper-tail
/// test.
pub fn bootstrap_test_hkz(
    sample: &ExperimentSample,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    plan.expect_method(Method::Bootstrap)?;
    let n = sample.len();
    let n1 = sample.n_treated();
    let tau_hat = diff_in_means(sample);
    let observed = hkz_stat(sample, tau_hat, theta);
    let aligned = align(sample, tau_hat);

    let reference: Vec<f64> = (0..plan.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(plan.seed, r as u64);
            let y: Vec<f64> = (0..n).map(|_| aligned[rng.random_range(0..n)]).collect();
            let (mut t_idx, mut c_idx) = (Vec::new(), Vec::new());
            draw_split(n, n1, &mut rng, &mut t_idx, &mut c_idx);
            let t: Vec<f64> = t_idx.iter().map(|&i| y[i]).collect();
            let c: Vec<f64> = c_idx.iter().map(|&i| y[i]).collect();
            distance_stat(&t, &c, mean(&t) - mean(&c), theta)
        })
        .collect();

    let v = verdict(observed, &reference, StatisticKind::Hkz.tail(), plan.alpha);
    Ok(TestReport {
        statistic: StatisticKind::Hkz,
        method: Method::Bootstrap,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value: v.p_value,
        reject: v.reject,
        alpha: plan.alpha,
        replicates: plan.replicates,
        seed: plan.seed,
        tau: Some(tau_hat),
        tau_grid: None,
        grid_p_values: None,
        ci_level: None,
        residualization: None,
        diagnostics: v.diagnostics,
    })
}
