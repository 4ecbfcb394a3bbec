//! Residualization of outcomes on covariates.

mod linear;
mod nw;

pub use linear::{
    least_squares, linear_interaction_fit, residualize_group_mean, residualize_linear, LinearFit,
};
pub(crate) use linear::groupwise_residuals;
pub use nw::{bandwidth_rule, nw_fit, residualize_nw, Bandwidth, NWConfig, NwFit, NwKernel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::group_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMethod {
    LinearInteraction,
    NadarayaWatson,
    GroupMean,
}

impl ResidualMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualMethod::LinearInteraction => "linear_interaction",
            ResidualMethod::NadarayaWatson => "nadaraya_watson",
            ResidualMethod::GroupMean => "group_mean",
        }
    }
}

/// Per-unit residuals with the treatment labels they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualizedSample {
    residuals: Vec<f64>,
    treatments: Vec<bool>,
    method: ResidualMethod,
    /// Evaluation points where a kernel fit had no positive weight and
    /// returned the training mean instead.
    fallbacks: usize,
}

impl ResidualizedSample {
    pub fn new(residuals: Vec<f64>, treatments: Vec<bool>, method: ResidualMethod) -> Result<Self> {
        if residuals.len() != treatments.len() {
            return Err(Error::invalid(format!(
                "{} residuals but {} treatment indicators",
                residuals.len(),
                treatments.len()
            )));
        }
        if residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("residuals must be finite"));
        }
        let n1 = treatments.iter().filter(|&&d| d).count();
        if n1 == 0 || n1 == treatments.len() {
            return Err(Error::invalid("both residual groups must be non-empty"));
        }
        Ok(ResidualizedSample { residuals, treatments, method, fallbacks: 0 })
    }

    pub(crate) fn with_fallbacks(mut self, fallbacks: usize) -> Self {
        self.fallbacks = fallbacks;
        self
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn treatments(&self) -> &[bool] {
        &self.treatments
    }

    pub fn method(&self) -> ResidualMethod {
        self.method
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// `(treated, control)` residuals in unit order.
    pub fn groups(&self) -> (Vec<f64>, Vec<f64>) {
        (
            group_values(&self.residuals, &self.treatments, true),
            group_values(&self.residuals, &self.treatments, false),
        )
    }
}
