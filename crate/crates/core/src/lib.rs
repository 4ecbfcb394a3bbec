//! Characteristic-function tests for treatment effect heterogeneity in
//! randomized experiments.
//!
//! The crate computes the location-free statistic `L_{n,theta}`, the
//! location-shift statistic of Henze, Klar and Zhu, and the covariate
//! residual statistic `D_{n,theta}`; calibrates them by bootstrap,
//! permutation, confidence-interval permutation and covariate permutation;
//! and runs Monte Carlo size and power experiments.

pub mod error;
pub mod expansion;
pub mod kernel;
pub mod quadrature;
pub mod regression;
pub mod resampling;
pub mod rng;
pub mod sample;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use quadrature::{l_quadrature_oracle, QuadratureConfig};
pub use regression::{
    bandwidth_rule, linear_interaction_fit, nw_fit, residualize_group_mean, residualize_linear,
    residualize_nw, Bandwidth, LinearFit, NWConfig, NwFit, NwKernel, ResidualMethod,
    ResidualizedSample,
};
pub use resampling::{
    assignment_sampler, bootstrap_test_hkz, bootstrap_test_l, ci_permutation_test,
    covariate_permutation_test, permutation_test_hkz, permutation_test_l, run_test, welch_ci,
    Diagnostics, Method, ResamplingPlan, ShiftMode, StatisticKind, TestReport,
};
pub use sample::{Covariates, ExperimentSample, Theta};
pub use simulation::{
    draw_cov, draw_nocov, gen_cov, gen_nocov, run_size_power, size_adjusted_power, CellResult,
    DgpConfig, Family, MonteCarloResult, PotentialOutcomes, TestSpec, Variation,
};
pub use stats::{
    d_theta_stat, diff_in_means, ecf, hkz_stat, l_theta_stat, t_stat_test, zeta_hat, ComplexValue,
    TStatResult, VarianceEstimate,
};
