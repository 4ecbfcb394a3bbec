use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major covariate matrix with one row per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Covariates {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::invalid("covariate matrix needs at least one column"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "covariate buffer has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariates must be finite"));
        }
        Ok(Covariates { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("covariate rows have unequal lengths"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.cols).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Keeps the rows whose index satisfies `keep`, in order.
    pub(crate) fn select(&self, keep: impl Fn(usize) -> bool) -> Covariates {
        let mut data = Vec::new();
        let mut rows = 0;
        for i in (0..self.rows).filter(|&i| keep(i)) {
            data.extend_from_slice(self.row(i));
            rows += 1;
        }
        Covariates { rows, cols: self.cols, data }
    }
}

/// Observed outcomes, binary treatment indicators and optional covariates of
/// a completely randomized experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSample {
    outcomes: Vec<f64>,
    treatments: Vec<bool>,
    covariates: Option<Covariates>,
}

impl ExperimentSample {
    pub fn new(outcomes: Vec<f64>, treatments: Vec<bool>) -> Result<Self> {
        Self::build(outcomes, treatments, None)
    }

    pub fn with_covariates(
        outcomes: Vec<f64>,
        treatments: Vec<bool>,
        covariates: Covariates,
    ) -> Result<Self> {
        Self::build(outcomes, treatments, Some(covariates))
    }

    /// Builds a sample from separate treated and control outcome lists,
    /// treated units first.
    pub fn from_groups(treated: &[f64], control: &[f64]) -> Result<Self> {
        let outcomes = treated.iter().chain(control).copied().collect();
        let treatments = std::iter::repeat_n(true, treated.len())
            .chain(std::iter::repeat_n(false, control.len()))
            .collect();
        Self::new(outcomes, treatments)
    }

    fn build(
        outcomes: Vec<f64>,
        treatments: Vec<bool>,
        covariates: Option<Covariates>,
    ) -> Result<Self> {
        let n = outcomes.len();
        if treatments.len() != n {
            return Err(Error::invalid(format!(
                "{n} outcomes but {} treatment indicators",
                treatments.len()
            )));
        }
        if let Some(x) = &covariates {
            if x.rows() != n {
                return Err(Error::invalid(format!(
                    "{n} outcomes but {} covariate rows",
                    x.rows()
                )));
            }
        }
        if n < 2 {
            return Err(Error::invalid("a sample needs at least two units"));
        }
        if outcomes.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("outcomes must be finite"));
        }
        let n1 = treatments.iter().filter(|&&d| d).count();
        if n1 == 0 || n1 == n {
            return Err(Error::invalid(format!(
                "both groups must be non-empty (n1 = {n1}, n0 = {})",
                n - n1
            )));
        }
        Ok(ExperimentSample { outcomes, treatments, covariates })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn n_treated(&self) -> usize {
        self.treatments.iter().filter(|&&d| d).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn treatments(&self) -> &[bool] {
        &self.treatments
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    /// Outcomes of the units with treatment indicator `d`, in unit order.
    pub fn group(&self, d: bool) -> Vec<f64> {
        group_values(&self.outcomes, &self.treatments, d)
    }

    /// Same units and assignment with new outcomes.
    pub fn with_outcomes(&self, outcomes: Vec<f64>) -> Result<Self> {
        Self::build(outcomes, self.treatments.clone(), self.covariates.clone())
    }

    /// Same units and outcomes under a different assignment.
    pub fn with_treatments(&self, treatments: Vec<bool>) -> Result<Self> {
        Self::build(self.outcomes.clone(), treatments, self.covariates.clone())
    }

    /// The sample with treatment and control labels exchanged.
    pub fn swap_labels(&self) -> Self {
        ExperimentSample {
            outcomes: self.outcomes.clone(),
            treatments: self.treatments.iter().map(|d| !d).collect(),
            covariates: self.covariates.clone(),
        }
    }

    pub fn without_covariates(&self) -> Self {
        ExperimentSample { covariates: None, ..self.clone() }
    }
}

pub(crate) fn group_values(values: &[f64], treatments: &[bool], d: bool) -> Vec<f64> {
    values
        .iter()
        .zip(treatments)
        .filter(|(_, &t)| t == d)
        .map(|(&v, _)| v)
        .collect()
}

/// Index of the spherical stable weight; the exp-kernel is `exp(-|x|^theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Theta(f64);

impl Theta {
    pub const NORMAL: Theta = Theta(2.0);
    pub const CAUCHY: Theta = Theta(1.0);

    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta <= 2.0 {
            Ok(Theta(theta))
        } else {
            Err(Error::invalid(format!("theta must lie in (0, 2], got {theta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `exp(-|d|^theta)`; even in `d` bit for bit.
    #[inline]
    pub fn kernel(self, d: f64) -> f64 {
        if self.0 == 2.0 {
            (-(d * d)).exp()
        } else if self.0 == 1.0 {
            (-d.abs()).exp()
        } else {
            (-d.abs().powf(self.0)).exp()
        }
    }
}

impl Default for Theta {
    fn default() -> Self {
        Theta::NORMAL
    }
}

impl TryFrom<f64> for Theta {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Theta::new(v)
    }
}

impl From<Theta> for f64 {
    fn from(t: Theta) -> f64 {
        t.0
    }
}
