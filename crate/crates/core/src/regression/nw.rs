use serde::{Deserialize, Serialize};

use super::{ResidualMethod, ResidualizedSample};
use crate::error::{Error, Result};
use crate::sample::{Covariates, ExperimentSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NwKernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl NwKernel {
    fn eval(self, u: f64) -> f64 {
        match self {
            NwKernel::Gaussian => (-0.5 * u * u).exp(),
            NwKernel::Epanechnikov => (1.0 - u * u).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    #[default]
    RuleOfThumb,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NWConfig {
    pub kernel: NwKernel,
    pub bandwidth: Bandwidth,
    /// Per-dimension multipliers of the bandwidth. `None` scales each
    /// dimension by its standard deviation relative to the geometric mean.
    pub scaling: Option<Vec<f64>>,
}

fn column_sds(x: &Covariates) -> Vec<f64> {
    let n = x.rows() as f64;
    (0..x.cols())
        .map(|j| {
            let m = x.column(j).sum::<f64>() / n;
            let ss: f64 = x.column(j).map(|v| (v - m) * (v - m)).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect()
}

/// Geometric mean of the non-degenerate column standard deviations.
fn sd_scale(sds: &[f64]) -> Option<f64> {
    let live: Vec<f64> = sds.iter().copied().filter(|&s| s > 0.0).collect();
    if live.is_empty() {
        None
    } else {
        Some((live.iter().map(|s| s.ln()).sum::<f64>() / live.len() as f64).exp())
    }
}

/// Rule-of-thumb bandwidth `1.06 * sigma * n^(-1/(4+q))`, with `sigma` the
/// geometric mean of the covariate standard deviations. Constant columns
/// are ignored; if every column is constant the bandwidth is one.
pub fn bandwidth_rule(x: &Covariates) -> Result<f64> {
    if x.rows() < 2 {
        return Err(Error::precondition("bandwidth rule needs at least two rows"));
    }
    let q = x.cols() as f64;
    Ok(match sd_scale(&column_sds(x)) {
        Some(sigma) => 1.06 * sigma * (x.rows() as f64).powf(-1.0 / (4.0 + q)),
        None => 1.0,
    })
}

/// Fitted Nadaraya-Watson regression; immutable and cheap to evaluate from
/// many threads.
#[derive(Debug, Clone)]
pub struct NwFit {
    x: Covariates,
    y: Vec<f64>,
    kernel: NwKernel,
    /// Per-dimension bandwidths `h * scale_k`.
    widths: Vec<f64>,
    train_mean: f64,
}

impl NwFit {
    pub fn bandwidth_per_dimension(&self) -> &[f64] {
        &self.widths
    }

    /// Kernel-weighted mean of the training outcomes at `x`. Returns the
    /// training mean and `true` when no training point has positive weight.
    pub fn eval(&self, point: &[f64]) -> (f64, bool) {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &yi) in self.y.iter().enumerate() {
            let w: f64 = self
                .x
                .row(i)
                .iter()
                .zip(point)
                .zip(&self.widths)
                .map(|((a, b), h)| self.kernel.eval((a - b) / h))
                .product();
            num += w * yi;
            den += w;
        }
        if den > 0.0 {
            (num / den, false)
        } else {
            (self.train_mean, true)
        }
    }

    pub fn predict(&self, point: &[f64]) -> f64 {
        self.eval(point).0
    }
}

pub fn nw_fit(x: &Covariates, y: &[f64], config: &NWConfig) -> Result<NwFit> {
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::invalid("kernel regression needs matching, non-empty x and y"));
    }
    let q = x.cols();
    let h = match config.bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::invalid(format!("bandwidth must be positive, got {h}"))),
        Bandwidth::RuleOfThumb if x.rows() >= 2 => bandwidth_rule(x)?,
        Bandwidth::RuleOfThumb => 1.0,
    };
    let scales = match &config.scaling {
        Some(s) => {
            if s.len() != q || s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("scaling needs one positive value per covariate"));
            }
            s.clone()
        }
        None if x.rows() >= 2 => {
            let sds = column_sds(x);
            match sd_scale(&sds) {
                Some(g) => sds.iter().map(|&s| if s > 0.0 { s / g } else { 1.0 }).collect(),
                None => vec![1.0; q],
            }
        }
        None => vec![1.0; q],
    };
    Ok(NwFit {
        x: x.clone(),
        y: y.to_vec(),
        kernel: config.kernel,
        widths: scales.iter().map(|s| h * s).collect(),
        train_mean: y.iter().sum::<f64>() / y.len() as f64,
    })
}

/// Residuals from kernel regressions fitted separately on the treated and
/// control units.
pub fn residualize_nw(sample: &ExperimentSample, config: &NWConfig) -> Result<ResidualizedSample> {
    let x = sample
        .covariates()
        .ok_or_else(|| Error::precondition("kernel residualization needs covariates"))?;
    let (n1, n0) = (sample.n_treated(), sample.n_control());
    if n1 < 5 || n0 < 5 {
        return Err(Error::precondition(format!(
            "kernel residualization needs at least 5 units per group (n1 = {n1}, n0 = {n0})"
        )));
    }
    let d = sample.treatments();
    let y = sample.outcomes();
    let mut residuals = vec![0.0; y.len()];
    let mut fallbacks = 0;
    for group in [true, false] {
        let xg = x.select(|i| d[i] == group);
        let yg: Vec<f64> = (0..y.len()).filter(|&i| d[i] == group).map(|i| y[i]).collect();
        let fit = nw_fit(&xg, &yg, config)?;
        for i in (0..y.len()).filter(|&i| d[i] == group) {
            let (m, fell_back) = fit.eval(x.row(i));
            fallbacks += usize::from(fell_back);
            residuals[i] = y[i] - m;
        }
    }
    Ok(ResidualizedSample::new(residuals, d.to_vec(), ResidualMethod::NadarayaWatson)?
        .with_fallbacks(fallbacks))
}
