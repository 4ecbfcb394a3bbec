use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use hetfx::{Method, ResidualMethod, ShiftMode, StatisticKind};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum StatArg {
    #[value(name = "l_theta")]
    #[serde(rename = "l_theta")]
    LTheta,
    #[value(name = "hkz")]
    #[serde(rename = "hkz")]
    Hkz,
    #[value(name = "d_theta")]
    #[serde(rename = "d_theta")]
    DTheta,
    #[value(name = "tstat")]
    #[serde(rename = "tstat")]
    TStat,
}

impl From<StatArg> for StatisticKind {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::LTheta => StatisticKind::LTheta,
            StatArg::Hkz => StatisticKind::Hkz,
            StatArg::DTheta => StatisticKind::DTheta,
            StatArg::TStat => StatisticKind::TStat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Boot,
    Perm,
    Ciperm,
    Covperm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Boot => Method::Bootstrap,
            MethodArg::Perm => Method::Permutation,
            MethodArg::Ciperm => Method::CiPermutation,
            MethodArg::Covperm => Method::CovariatePermutation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ResidArg {
    #[value(name = "linear_interaction", alias = "linear")]
    #[serde(rename = "linear_interaction", alias = "linear")]
    Linear,
    #[value(name = "nadaraya_watson", alias = "nw")]
    #[serde(rename = "nadaraya_watson", alias = "nw")]
    Nw,
    #[value(name = "group_mean")]
    #[serde(rename = "group_mean")]
    GroupMean,
}

impl From<ResidArg> for ResidualMethod {
    fn from(r: ResidArg) -> Self {
        match r {
            ResidArg::Linear => ResidualMethod::LinearInteraction,
            ResidArg::Nw => ResidualMethod::NadarayaWatson,
            ResidArg::GroupMean => ResidualMethod::GroupMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ShiftArg {
    #[value(name = "coefficient_sum")]
    #[serde(rename = "coefficient_sum")]
    CoefficientSum,
    #[value(name = "unit_specific", alias = "unit")]
    #[serde(rename = "unit_specific", alias = "unit")]
    Unit,
}

impl From<ShiftArg> for ShiftMode {
    fn from(s: ShiftArg) -> Self {
        match s {
            ShiftArg::CoefficientSum => ShiftMode::CoefficientSum,
            ShiftArg::Unit => ShiftMode::UnitSpecific,
        }
    }
}

/// Options of `hetfx test`. Every field is optional so that a config file
/// can fill what the flags leave out.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestOptions {
    /// CSV file with a header row
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcome column
    #[arg(long)]
    pub outcome: Option<String>,
    /// Treatment column (values 0 or 1)
    #[arg(long)]
    pub treatment: Option<String>,
    /// Covariate columns, comma separated
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Test statistic [default: l_theta]
    #[arg(long, value_enum)]
    pub stat: Option<StatArg>,
    /// Calibration method [default: perm, or covperm for d_theta]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Kernel exponent in (0, 2] [default: 2]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Resampling replicates [default: 2000]
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    /// Test level [default: 0.05]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid size of the interval-permutation test [default: 21]
    #[arg(long)]
    pub m: Option<usize>,
    /// Confidence level of the interval-permutation test [default: 0.999]
    #[arg(long = "ci-level")]
    pub ci_level: Option<f64>,
    /// Seed of the resampling streams [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Residualization of the covariate test [default: linear_interaction]
    #[arg(long, value_enum)]
    pub residualization: Option<ResidArg>,
    /// Outcome shift of the covariate test [default: coefficient_sum]
    #[arg(long, value_enum)]
    pub shift: Option<ShiftArg>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: json]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! prefer_flags {
    ($flags:expr, $file:expr, $($field:ident),+) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field; } )+
    };
}

impl TestOptions {
    pub fn merge(mut self, file: TestOptions) -> Self {
        prefer_flags!(
            self, file, input, outcome, treatment, covariates, stat, method, theta, b, alpha, m, ci_level,
            seed, residualization, shift, out, format
        );
        self
    }
}

/// Options of `hetfx residualize`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualizeOptions {
    /// CSV file with a header row
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcome column
    #[arg(long)]
    pub outcome: Option<String>,
    /// Treatment column (values 0 or 1)
    #[arg(long)]
    pub treatment: Option<String>,
    /// Covariate columns, comma separated
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Residualization [default: linear_interaction]
    #[arg(long, value_enum)]
    pub method: Option<ResidArg>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ResidualizeOptions {
    pub fn merge(mut self, file: ResidualizeOptions) -> Self {
        prefer_flags!(self, file, input, outcome, treatment, covariates, method, out, format);
        self
    }
}

/// Options of `hetfx simulate`. A preset fixes the grid; the remaining
/// fields override parts of it.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    /// Preset grid: table1, table2, table3 or table4
    #[arg(long)]
    pub preset: Option<String>,
    /// Monte Carlo replications per cell [default: 2000]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Resampling replicates per test [default: 2000]
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Outcome families, comma separated
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    /// Heterogeneity levels, comma separated
    #[arg(long = "sigma-tau", value_delimiter = ',')]
    #[serde(rename = "sigma_tau")]
    pub sigma_tau: Option<Vec<f64>>,
    /// Test columns such as l_theta/perm, comma separated
    #[arg(long, value_delimiter = ',')]
    pub tests: Option<Vec<String>>,
    /// Outcome shift of covariate permutation tests [default: coefficient_sum]
    #[arg(long, value_enum)]
    pub shift: Option<ShiftArg>,
    /// Directory for cells.csv, cells.json and table.txt [default: .]
    #[arg(long = "out-dir")]
    #[serde(rename = "out_dir")]
    pub out_dir: Option<PathBuf>,
}

impl SimulateOptions {
    pub fn merge(mut self, file: SimulateOptions) -> Self {
        prefer_flags!(self, file, preset, reps, b, seed, sizes, families, sigma_tau, tests, shift, out_dir);
        self
    }
}

/// Reads a TOML config whose keys mirror the long flag names.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}
