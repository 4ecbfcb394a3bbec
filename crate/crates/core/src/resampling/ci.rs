use statrs::function::erf::erf_inv;

use super::permutation::{hkz_reference, l_reference};
use super::{align, verdict, Method, ResamplingPlan, StatisticKind, TestReport};
use crate::error::{Error, Result};
use crate::sample::{ExperimentSample, Theta};
use crate::stats::{diff_in_means, hkz_stat, l_theta_stat, mean};

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Normal-approximation interval for the average effect with unpooled
/// group variances.
pub fn welch_ci(sample: &ExperimentSample, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let t = sample.group(true);
    let c = sample.group(false);
    if t.len() < 2 || c.len() < 2 {
        return Err(Error::precondition("the interval needs at least two units per group"));
    }
    let tau = mean(&t) - mean(&c);
    let se = (sample_variance(&t) / t.len() as f64 + sample_variance(&c) / c.len() as f64).sqrt();
    // standard normal quantile at (1 + level) / 2
    let z = std::f64::consts::SQRT_2 * erf_inv(level);
    Ok((tau - z * se, tau + z * se))
}

/// `m` equally spaced points from `lo` to `hi`; a single point sits at the
/// estimate.
fn grid(lo: f64, hi: f64, m: usize, centre: f64) -> Vec<f64> {
    if m == 1 {
        return vec![centre];
    }
    (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect()
}

/// Permutation test maximized over effects in a high-confidence interval.
///
/// Runs the aligned permutation test at every grid value of the effect,
/// with the same replicate streams at each grid point, and reports the
/// largest p-value plus `1 - ci_level`.
pub fn ci_permutation_test(
    sample: &ExperimentSample,
    kind: StatisticKind,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    plan.expect_method(Method::CiPermutation)?;
    let (lo, hi) = welch_ci(sample, plan.ci_level)?;
    let tau_hat = diff_in_means(sample);
    let taus = grid(lo, hi, plan.grid_size, tau_hat);
    let n1 = sample.n_treated();
    let (b, seed) = (plan.replicates, plan.seed);

    let observed = match kind {
        StatisticKind::LTheta => l_theta_stat(sample, theta),
        StatisticKind::Hkz => hkz_stat(sample, tau_hat, theta),
        other => {
            return Err(Error::invalid(format!(
                "the interval-permutation test supports l_theta and hkz, not {}",
                other.as_str()
            )))
        }
    };

    let mut best: Option<(f64, super::Verdict)> = None;
    let mut grid_p = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let aligned = align(sample, tau);
        let reference = match kind {
            StatisticKind::LTheta => l_reference(&aligned, n1, theta, b, seed),
            _ => hkz_reference(&aligned, n1, theta, b, seed),
        };
        let v = verdict(observed, &reference, kind.tail(), plan.alpha);
        grid_p.push(v.p_value);
        if best.as_ref().is_none_or(|(_, bv)| v.p_value > bv.p_value) {
            best = Some((tau, v));
        }
    }
    let (tau_max, v) = best.expect("grid is non-empty");
    let p_value = (v.p_value + (1.0 - plan.ci_level)).min(1.0);
    Ok(TestReport {
        statistic: kind,
        method: Method::CiPermutation,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value,
        reject: p_value <= plan.alpha,
        alpha: plan.alpha,
        replicates: b,
        seed,
        tau: Some(tau_max),
        tau_grid: Some(taus),
        grid_p_values: Some(grid_p),
        ci_level: Some(plan.ci_level),
        residualization: None,
        diagnostics: v.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_groups_give_point_interval() {
        let s = ExperimentSample::from_groups(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(welch_ci(&s, 0.999).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn swapping_groups_negates_interval() {
        let s = ExperimentSample::from_groups(&[1.0, 2.5, 0.3], &[0.0, -1.0, 0.7, 0.2]).unwrap();
        let (lo, hi) = welch_ci(&s, 0.99).unwrap();
        let (lo2, hi2) = welch_ci(&s.swap_labels(), 0.99).unwrap();
        assert!((lo + hi2).abs() < 1e-12 && (hi + lo2).abs() < 1e-12);
        assert!(lo < hi);
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = grid(-1.0, 1.0, 21, 0.0);
        assert_eq!(g.len(), 21);
        assert_eq!((g[0], g[20]), (-1.0, 1.0));
        assert!((g[10]).abs() < 1e-15);
        assert_eq!(grid(-1.0, 1.0, 1, 0.3), vec![0.3]);
    }
}
