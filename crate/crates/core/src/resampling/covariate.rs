use rayon::prelude::*;

use super::assign::draw_split;
use super::{distance_stat, verdict, Method, ResamplingPlan, ShiftMode, StatisticKind, TestReport};
use crate::error::{Error, Result};
use crate::regression::{
    groupwise_residuals, linear_interaction_fit, residualize_nw, NWConfig, ResidualMethod,
};
use crate::rng::stream_rng;
use crate::sample::{ExperimentSample, Theta};
use crate::sample::group_values;

fn residuals(
    sample: &ExperimentSample,
    y: &[f64],
    d: &[bool],
    method: ResidualMethod,
) -> Result<(Vec<f64>, usize)> {
    let x = sample.covariates().expect("checked by caller");
    match method {
        ResidualMethod::LinearInteraction => Ok((groupwise_residuals(y, d, x), 0)),
        ResidualMethod::NadarayaWatson => {
            let s = ExperimentSample::with_covariates(y.to_vec(), d.to_vec(), x.clone())?;
            let r = residualize_nw(&s, &NWConfig::default())?;
            Ok((r.residuals().to_vec(), r.fallbacks()))
        }
        ResidualMethod::GroupMean => {
            Err(Error::invalid("covariate permutation needs a covariate residualization"))
        }
    }
}

fn d_stat(res: &[f64], d: &[bool], theta: Theta) -> f64 {
    distance_stat(&group_values(res, d, true), &group_values(res, d, false), 0.0, theta)
}

/// Permutation test for heterogeneity beyond what the covariates explain.
///
/// The interaction model `Y ~ (1, D, X', D X')` is fitted once. Each
/// replicate draws a new assignment `D*`, moves the outcomes to
/// `Y + (D* - D) s` with `s` from the fitted treatment coefficients (see
/// [`ShiftMode`]), residualizes again under `D*` and recomputes the residual
/// distance statistic. Upper tail.
pub fn covariate_permutation_test(
    sample: &ExperimentSample,
    theta: Theta,
    plan: &ResamplingPlan,
) -> Result<TestReport> {
    plan.expect_method(Method::CovariatePermutation)?;
    let x = sample
        .covariates()
        .ok_or_else(|| Error::precondition("the covariate permutation test needs covariates"))?;
    let fit = linear_interaction_fit(sample)?;
    let shift: Vec<f64> = match plan.shift_mode {
        ShiftMode::CoefficientSum => vec![fit.treatment_shift(); sample.len()],
        ShiftMode::UnitSpecific => (0..sample.len()).map(|i| fit.unit_shift(x.row(i))).collect(),
    };
    let y = sample.outcomes();
    let d = sample.treatments();
    let (n, n1) = (sample.len(), sample.n_treated());
    let method = plan.residualization;

    let (res_obs, fallbacks_obs) = residuals(sample, y, d, method)?;
    let observed = d_stat(&res_obs, d, theta);

    let draws: Vec<(f64, usize)> = (0..plan.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(plan.seed, r as u64);
            let (mut t, mut c) = (Vec::with_capacity(n1), Vec::with_capacity(n - n1));
            draw_split(n, n1, &mut rng, &mut t, &mut c);
            let mut d_star = vec![false; n];
            t.iter().for_each(|&i| d_star[i] = true);
            let y_star: Vec<f64> = (0..n)
                .map(|i| y[i] + (f64::from(u8::from(d_star[i])) - f64::from(u8::from(d[i]))) * shift[i])
                .collect();
            let (res, fb) = residuals(sample, &y_star, &d_star, method)?;
            Ok((d_stat(&res, &d_star, theta), fb))
        })
        .collect::<Result<_>>()?;

    let reference: Vec<f64> = draws.iter().map(|x| x.0).collect();
    let mut v = verdict(observed, &reference, StatisticKind::DTheta.tail(), plan.alpha);
    v.diagnostics.nw_fallbacks = fallbacks_obs + draws.iter().map(|x| x.1).sum::<usize>();
    Ok(TestReport {
        statistic: StatisticKind::DTheta,
        method: Method::CovariatePermutation,
        theta: theta.value(),
        observed,
        ecp: v.ecp,
        p_value: v.p_value,
        reject: v.reject,
        alpha: plan.alpha,
        replicates: plan.replicates,
        seed: plan.seed,
        tau: (plan.shift_mode == ShiftMode::CoefficientSum).then_some(shift[0]),
        tau_grid: None,
        grid_p_values: None,
        ci_level: None,
        residualization: Some(method),
        diagnostics: v.diagnostics,
    })
}
