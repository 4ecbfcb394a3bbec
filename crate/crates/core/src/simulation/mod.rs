//! Monte Carlo size and power experiments.

mod dgp;

pub use dgp::{
    draw, draw_cov, draw_nocov, gen_cov, gen_nocov, generate, DgpConfig, Family, PotentialOutcomes,
    Variation,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::residualize_linear;
use crate::resampling::{order_quantile, run_test, Method, ResamplingPlan, ShiftMode, StatisticKind, Tail};
use crate::rng::derive_seed;
use crate::sample::{ExperimentSample, Theta};
use crate::stats::{d_theta_stat, diff_in_means, hkz_stat, l_theta_stat, t_stat_test};

/// One test column of a simulation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub statistic: StatisticKind,
    pub method: Method,
    pub theta: Theta,
    pub replicates: usize,
    pub alpha: f64,
    pub grid_size: usize,
    pub ci_level: f64,
    /// Outcome shift of the covariate permutation test.
    #[serde(default)]
    pub shift_mode: ShiftMode,
}

impl TestSpec {
    pub fn new(statistic: StatisticKind, method: Method, replicates: usize) -> Self {
        TestSpec {
            statistic,
            method,
            theta: Theta::NORMAL,
            replicates,
            alpha: 0.05,
            grid_size: 21,
            ci_level: 0.999,
            shift_mode: ShiftMode::default(),
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.statistic.as_str(), self.method.as_str())
    }

    fn plan(&self, seed: u64) -> ResamplingPlan {
        let mut plan = ResamplingPlan::new(self.method, self.replicates, seed)
            .with_alpha(self.alpha)
            .with_grid(self.grid_size, self.ci_level);
        plan.shift_mode = self.shift_mode;
        plan
    }
}

/// Rejection count for one (test, design) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub test: String,
    pub family: Family,
    pub n: usize,
    pub sigma_tau: f64,
    pub systematic: Option<bool>,
    pub idiosyncratic: Option<bool>,
    /// Replications that produced a decision.
    pub replications: usize,
    pub rejections: usize,
    /// Replications whose test returned an error; excluded from the rate.
    pub errors: usize,
    pub rejection_rate: f64,
    pub mc_se: f64,
}

impl CellResult {
    fn new(test: String, dgp: &DgpConfig, rejections: usize, valid: usize, errors: usize) -> Self {
        let p = if valid > 0 { rejections as f64 / valid as f64 } else { f64::NAN };
        CellResult {
            test,
            family: dgp.family,
            n: dgp.n,
            sigma_tau: dgp.sigma_tau,
            systematic: dgp.variation.map(|v| v.systematic),
            idiosyncratic: dgp.variation.map(|v| v.idiosyncratic),
            replications: valid,
            rejections,
            errors,
            rejection_rate: p,
            mc_se: (p * (1.0 - p) / valid as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub master_seed: u64,
    pub cells: Vec<CellResult>,
    pub elapsed_seconds: f64,
}

fn check_grid(grid: &[DgpConfig], tests: &[TestSpec], r: usize) -> Result<()> {
    if grid.is_empty() || tests.is_empty() {
        return Err(Error::invalid("the simulation grid is empty"));
    }
    if r < 100 {
        return Err(Error::invalid(format!("at least 100 replications are required, got {r}")));
    }
    Ok(())
}

/// Stable identifier of a design, independent of its seed field.
fn design_key(d: &DgpConfig) -> u64 {
    let fam = d.family as u64;
    let var = d.variation.map_or(0, |v| 1 + u64::from(v.systematic) + 2 * u64::from(v.idiosyncratic));
    let mut k = derive_seed(fam, d.n as u64);
    k = derive_seed(k, d.sigma_tau.to_bits());
    k = derive_seed(k, d.treated_fraction.to_bits());
    derive_seed(k, var)
}

/// Seed of replication `r` of a design. Designs that differ only in their
/// test columns share data.
pub fn replication_seed(master: u64, design: &DgpConfig, r: usize) -> u64 {
    derive_seed(derive_seed(master, design_key(design)), r as u64)
}

/// Rejection rates of every test on every design over `r` replications.
///
/// Each replication draws one sample and runs all tests on it; the
/// resampling seed of a replication is derived from its data seed.
pub fn run_size_power(
    grid: &[DgpConfig],
    tests: &[TestSpec],
    r: usize,
    master_seed: u64,
) -> Result<MonteCarloResult> {
    check_grid(grid, tests, r)?;
    let start = Instant::now();
    let mut cells = Vec::with_capacity(grid.len() * tests.len());
    for design in grid {
        let decisions: Vec<Vec<Option<bool>>> = (0..r)
            .into_par_iter()
            .map(|rep| {
                let seed = replication_seed(master_seed, design, rep);
                let sample = generate(&design.with_seed(seed));
                tests
                    .iter()
                    .map(|t| {
                        let s = sample.as_ref().ok()?;
                        run_test(s, t.statistic, t.theta, &t.plan(derive_seed(seed, 1)))
                            .ok()
                            .map(|rep| rep.reject)
                    })
                    .collect()
            })
            .collect();
        for (k, t) in tests.iter().enumerate() {
            let rejections = decisions.iter().filter(|d| d[k] == Some(true)).count();
            let errors = decisions.iter().filter(|d| d[k].is_none()).count();
            cells.push(CellResult::new(t.label(), design, rejections, r - errors, errors));
        }
    }
    Ok(MonteCarloResult {
        master_seed,
        cells,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The statistic itself, without calibration. The location-shift statistic
/// uses the difference in means, the residual statistic the interaction
/// model, and `TStat` the studentized `z`.
pub fn raw_statistic(sample: &ExperimentSample, kind: StatisticKind, theta: Theta) -> Result<f64> {
    Ok(match kind {
        StatisticKind::LTheta => l_theta_stat(sample, theta),
        StatisticKind::Hkz => hkz_stat(sample, diff_in_means(sample), theta),
        StatisticKind::DTheta => d_theta_stat(&residualize_linear(sample)?, theta),
        StatisticKind::TStat => t_stat_test(sample, theta, 0.0)?.z,
    })
}

/// Critical values from the simulated null distribution of a statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub lower: Option<f64>,
    pub upper: f64,
}

impl CriticalValues {
    pub fn from_null(values: &[f64], tail: Tail, alpha: f64) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        match tail {
            Tail::TwoSided => CriticalValues {
                lower: Some(order_quantile(&sorted, alpha / 2.0)),
                upper: order_quantile(&sorted, 1.0 - alpha / 2.0),
            },
            Tail::Upper => CriticalValues { lower: None, upper: order_quantile(&sorted, 1.0 - alpha) },
        }
    }

    pub fn rejects(&self, stat: f64) -> bool {
        stat > self.upper || self.lower.is_some_and(|lo| stat < lo)
    }
}

fn simulate_statistic(
    design: &DgpConfig,
    kind: StatisticKind,
    theta: Theta,
    r: usize,
    master: u64,
) -> Vec<Option<f64>> {
    (0..r)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(master, design, rep);
            let s = generate(&design.with_seed(seed)).ok()?;
            raw_statistic(&s, kind, theta).ok()
        })
        .collect()
}

/// Power against critical values taken from the simulated null.
///
/// Phase one simulates `r` null samples of each design's null counterpart
/// and takes the 2.5/97.5 (two-sided) or 95th (upper) percentiles of the
/// statistic; phase two counts how often the statistic on `r` draws of the
/// design falls outside them. Only the statistic of each test spec is used.
pub fn size_adjusted_power(
    grid: &[DgpConfig],
    tests: &[TestSpec],
    r: usize,
    master_seed: u64,
) -> Result<MonteCarloResult> {
    check_grid(grid, tests, r)?;
    let start = Instant::now();
    let null_master = derive_seed(master_seed, 0x6e75_6c6c);
    let mut cells = Vec::new();
    for design in grid {
        for t in tests {
            let null: Vec<f64> =
                simulate_statistic(&design.null_counterpart(), t.statistic, t.theta, r, null_master)
                    .into_iter()
                    .flatten()
                    .collect();
            if null.is_empty() {
                return Err(Error::DegenerateSample("no null draw produced a statistic".into()));
            }
            let crit = CriticalValues::from_null(&null, t.statistic.tail(), t.alpha);
            let alt = simulate_statistic(design, t.statistic, t.theta, r, master_seed);
            let errors = alt.iter().filter(|s| s.is_none()).count();
            let rejections = alt.iter().flatten().filter(|&&s| crit.rejects(s)).count();
            cells.push(CellResult::new(t.label(), design, rejections, r - errors, errors));
        }
    }
    Ok(MonteCarloResult {
        master_seed,
        cells,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}
