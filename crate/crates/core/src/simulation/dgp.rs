use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resampling::assignment_sampler;
use crate::rng::stream_rng;
use crate::sample::{Covariates, ExperimentSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    T5,
    /// Rate one.
    Exponential,
    /// `exp` of a standard normal.
    Lognormal,
    /// Linear outcome model in four covariates.
    CovariateLinear,
}

impl Family {
    pub const NO_COVARIATES: [Family; 4] =
        [Family::Exponential, Family::Lognormal, Family::Normal, Family::T5];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::T5 => "t5",
            Family::Exponential => "exponential",
            Family::Lognormal => "lognormal",
            Family::CovariateLinear => "covariate_linear",
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Family::Normal => rng.sample(StandardNormal),
            Family::T5 => StudentT::new(5.0).expect("valid df").sample(rng),
            Family::Exponential => rng.sample(Exp1),
            Family::Lognormal => rng.sample::<f64, _>(StandardNormal).exp(),
            Family::CovariateLinear => unreachable!("covariate outcomes are drawn by draw_cov"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Family::Normal),
            "t5" => Ok(Family::T5),
            "exponential" => Ok(Family::Exponential),
            "lognormal" => Ok(Family::Lognormal),
            "covariate_linear" => Ok(Family::CovariateLinear),
            other => Err(Error::invalid(format!("unknown family {other:?}"))),
        }
    }
}

/// Which components of treatment effect variation the covariate design has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Variation {
    /// Effect varies with `X1` and `X3`.
    pub systematic: bool,
    /// Effect has an independent normal component.
    pub idiosyncratic: bool,
}

impl Variation {
    pub const ALL: [Variation; 4] = [
        Variation { systematic: false, idiosyncratic: false },
        Variation { systematic: false, idiosyncratic: true },
        Variation { systematic: true, idiosyncratic: false },
        Variation { systematic: true, idiosyncratic: true },
    ];

    pub fn label(self) -> &'static str {
        match (self.systematic, self.idiosyncratic) {
            (false, false) => "None",
            (false, true) => "Idiosyncratic",
            (true, false) => "Systematic",
            (true, true) => "Systematic & Idiosyncratic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub family: Family,
    pub n: usize,
    pub sigma_tau: f64,
    pub treated_fraction: f64,
    pub variation: Option<Variation>,
    pub seed: u64,
}

impl DgpConfig {
    /// Design without covariates: half the units treated.
    pub fn nocov(family: Family, n: usize, sigma_tau: f64, seed: u64) -> Self {
        DgpConfig { family, n, sigma_tau, treated_fraction: 0.5, variation: None, seed }
    }

    /// Covariate design: sixty percent of the units treated.
    pub fn cov(n: usize, variation: Variation, seed: u64) -> Self {
        DgpConfig {
            family: Family::CovariateLinear,
            n,
            sigma_tau: 0.0,
            treated_fraction: 0.6,
            variation: Some(variation),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        DgpConfig { seed, ..self }
    }

    /// The same design without heterogeneity beyond what is allowed under
    /// the null: `sigma_tau = 0`, or no idiosyncratic component.
    pub fn null_counterpart(self) -> Self {
        DgpConfig {
            sigma_tau: 0.0,
            variation: self.variation.map(|v| Variation { idiosyncratic: false, ..v }),
            ..self
        }
    }

    fn treated_count(&self) -> Result<usize> {
        if !(self.treated_fraction > 0.0 && self.treated_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "treated fraction must lie in (0, 1), got {}",
                self.treated_fraction
            )));
        }
        let n1 = (self.treated_fraction * self.n as f64).floor() as usize;
        if n1 == 0 || n1 >= self.n {
            return Err(Error::invalid(format!(
                "{} units with treated fraction {} leave a group empty",
                self.n, self.treated_fraction
            )));
        }
        Ok(n1)
    }
}

/// Both potential outcomes and the realized assignment of one draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomes {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub treatments: Vec<bool>,
    pub covariates: Option<Covariates>,
}

impl PotentialOutcomes {
    /// Unit-level effects `Y(1) - Y(0)`.
    pub fn effects(&self) -> Vec<f64> {
        self.y1.iter().zip(&self.y0).map(|(a, b)| a - b).collect()
    }

    /// Observed outcomes `D Y(1) + (1 - D) Y(0)`.
    pub fn observe(&self) -> Result<ExperimentSample> {
        let y = (0..self.y0.len())
            .map(|i| if self.treatments[i] { self.y1[i] } else { self.y0[i] })
            .collect();
        match &self.covariates {
            Some(x) => ExperimentSample::with_covariates(y, self.treatments.clone(), x.clone()),
            None => ExperimentSample::new(y, self.treatments.clone()),
        }
    }
}

/// `Y(0) = e`, `Y(1) = Y(0) + 1 + sigma_tau Y(0)` with `e` from the family,
/// under complete randomization of `floor(fraction n)` treated units.
pub fn draw_nocov(config: &DgpConfig) -> Result<PotentialOutcomes> {
    if config.family == Family::CovariateLinear {
        return Err(Error::invalid("covariate_linear is generated by draw_cov"));
    }
    if !(config.sigma_tau >= 0.0 && config.sigma_tau.is_finite()) {
        return Err(Error::invalid("sigma_tau must be finite and non-negative"));
    }
    let n1 = config.treated_count()?;
    let mut rng = stream_rng(config.seed, 0);
    let y0: Vec<f64> = (0..config.n).map(|_| config.family.draw(&mut rng)).collect();
    let treatments = assignment_sampler(config.n, n1, &mut rng)?;
    let y1 = y0.iter().map(|&e| e + 1.0 + config.sigma_tau * e).collect();
    Ok(PotentialOutcomes { y0, y1, treatments, covariates: None })
}

/// Observed sample of [`draw_nocov`].
pub fn gen_nocov(config: &DgpConfig) -> Result<ExperimentSample> {
    draw_nocov(config)?.observe()
}

/// Linear outcome model in `X1, X4 ~ N(0, 1)`, `X2 ~ Bernoulli(0.5)`,
/// `X3 ~ Bernoulli(0.25)`:
/// `Y(0) = 0.3 + 0.2 X1 + 0.3 X2 - 0.4 X3 + 0.8 X4 + u`, `u ~ N(0, 0.26^2)`,
/// and `Y(1) = Y(0) + delta + e` with `delta = 0.3` or
/// `0.2 + 0.1 X1 + 0.4 X3`, and `e = 0` or `N(0, 0.2^2)`.
pub fn draw_cov(config: &DgpConfig) -> Result<PotentialOutcomes> {
    if config.family != Family::CovariateLinear {
        return Err(Error::invalid("draw_cov needs the covariate_linear family"));
    }
    let variation = config
        .variation
        .ok_or_else(|| Error::invalid("the covariate design needs variation flags"))?;
    let n1 = config.treated_count()?;
    let n = config.n;
    let mut rng = stream_rng(config.seed, 0);
    let half = Bernoulli::new(0.5).expect("valid p");
    let quarter = Bernoulli::new(0.25).expect("valid p");
    let mut x = Vec::with_capacity(4 * n);
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    for _ in 0..n {
        let x1: f64 = rng.sample(StandardNormal);
        let x2 = f64::from(u8::from(half.sample(&mut rng)));
        let x3 = f64::from(u8::from(quarter.sample(&mut rng)));
        let x4: f64 = rng.sample(StandardNormal);
        let u = 0.26 * rng.sample::<f64, _>(StandardNormal);
        let e = 0.2 * rng.sample::<f64, _>(StandardNormal);
        let base = 0.3 + 0.2 * x1 + 0.3 * x2 - 0.4 * x3 + 0.8 * x4 + u;
        let delta = if variation.systematic { 0.2 + 0.1 * x1 + 0.4 * x3 } else { 0.3 };
        y0.push(base);
        y1.push(base + delta + if variation.idiosyncratic { e } else { 0.0 });
        x.extend_from_slice(&[x1, x2, x3, x4]);
    }
    let treatments = assignment_sampler(n, n1, &mut rng)?;
    let covariates = Some(Covariates::from_row_major(n, 4, x)?);
    Ok(PotentialOutcomes { y0, y1, treatments, covariates })
}

/// Observed sample of [`draw_cov`].
pub fn gen_cov(config: &DgpConfig) -> Result<ExperimentSample> {
    draw_cov(config)?.observe()
}

/// Potential outcomes from whichever generator matches the family.
pub fn draw(config: &DgpConfig) -> Result<PotentialOutcomes> {
    match config.family {
        Family::CovariateLinear => draw_cov(config),
        _ => draw_nocov(config),
    }
}

/// Observed sample from whichever generator matches the family.
pub fn generate(config: &DgpConfig) -> Result<ExperimentSample> {
    draw(config)?.observe()
}
