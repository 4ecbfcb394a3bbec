use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ResidualMethod, ResidualizedSample};
use crate::error::{Error, Result};
use crate::sample::{Covariates, ExperimentSample};

/// Least-squares fit of the outcome on `(1, D, X', D X')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Ordered as intercept, treatment, the `q` covariates, then the `q`
    /// treatment interactions.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
}

impl LinearFit {
    fn q(&self) -> usize {
        (self.coefficients.len() - 2) / 2
    }

    /// Sum of the coefficients on `(D, D X')`.
    pub fn treatment_shift(&self) -> f64 {
        let q = self.q();
        self.coefficients[1] + self.coefficients[2 + q..].iter().sum::<f64>()
    }

    /// Treatment effect implied by the fit at covariate row `x`:
    /// `(1, x') beta_{(D, D X')}`.
    pub fn unit_shift(&self, x: &[f64]) -> f64 {
        let q = self.q();
        self.coefficients[1]
            + self.coefficients[2 + q..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Minimum-norm least-squares solution of `design * beta ~ y`, with the
/// numerical rank of the design. Singular values below
/// `max(n, p) * eps * s_max` are treated as zero.
pub fn least_squares(design: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, usize) {
    let (n, p) = design.shape();
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = n.max(p) as f64 * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return (vec![0.0; p], 0);
    }
    let b = DVector::from_column_slice(y);
    let beta = svd.solve(&b, tol).expect("U and V were computed");
    (beta.iter().copied().collect(), rank)
}

fn interaction_design(treatments: &[bool], x: &Covariates) -> DMatrix<f64> {
    let n = treatments.len();
    let q = x.cols();
    DMatrix::from_fn(n, 2 + 2 * q, |i, j| {
        let d = if treatments[i] { 1.0 } else { 0.0 };
        match j {
            0 => 1.0,
            1 => d,
            j if j < 2 + q => x.row(i)[j - 2],
            j => d * x.row(i)[j - 2 - q],
        }
    })
}

pub fn linear_interaction_fit(sample: &ExperimentSample) -> Result<LinearFit> {
    let x = sample
        .covariates()
        .ok_or_else(|| Error::precondition("the interaction model needs covariates"))?;
    let design = interaction_design(sample.treatments(), x);
    let (coefficients, rank) = least_squares(&design, sample.outcomes());
    let beta = DVector::from_column_slice(&coefficients);
    let fitted: Vec<f64> = (&design * beta).iter().copied().collect();
    let residuals = sample.outcomes().iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(LinearFit { coefficients, fitted, residuals, rank })
}

/// Residuals of the interaction model. Without covariates the design is
/// `(1, D)` and the residuals are the within-group demeaned outcomes.
pub fn residualize_linear(sample: &ExperimentSample) -> Result<ResidualizedSample> {
    match sample.covariates() {
        Some(_) => {
            let fit = linear_interaction_fit(sample)?;
            ResidualizedSample::new(
                fit.residuals,
                sample.treatments().to_vec(),
                ResidualMethod::LinearInteraction,
            )
        }
        None => residualize_group_mean(sample),
    }
}

pub fn residualize_group_mean(sample: &ExperimentSample) -> Result<ResidualizedSample> {
    let y = sample.outcomes();
    let d = sample.treatments();
    let mut residuals = vec![0.0; y.len()];
    for group in [true, false] {
        let idx: Vec<usize> = (0..y.len()).filter(|&i| d[i] == group).collect();
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        for &i in &idx {
            residuals[i] = y[i] - m;
        }
    }
    ResidualizedSample::new(residuals, d.to_vec(), ResidualMethod::GroupMean)
}

/// Residuals of `y` on `(1, X)` fitted separately in each treatment group.
///
/// The interaction design spans exactly the block-diagonal space of the two
/// per-group designs, so these are the interaction-model residuals. Each
/// group is solved on its centred covariates through the `(q x q)` Gram
/// matrix, which is much cheaper than a full decomposition when the same
/// covariates are refitted under many assignments.
pub(crate) fn groupwise_residuals(y: &[f64], treatments: &[bool], x: &Covariates) -> Vec<f64> {
    let q = x.cols();
    let mut out = vec![0.0; y.len()];
    let mut idx = Vec::with_capacity(y.len());
    for group in [true, false] {
        idx.clear();
        idx.extend((0..y.len()).filter(|&i| treatments[i] == group));
        let m = idx.len() as f64;
        let y_bar = idx.iter().map(|&i| y[i]).sum::<f64>() / m;
        let mut x_bar = vec![0.0; q];
        for &i in &idx {
            for (acc, v) in x_bar.iter_mut().zip(x.row(i)) {
                *acc += v;
            }
        }
        x_bar.iter_mut().for_each(|v| *v /= m);

        let mut gram = DMatrix::<f64>::zeros(q, q);
        let mut xty = DVector::<f64>::zeros(q);
        let mut xc = vec![0.0; q];
        for &i in &idx {
            for (k, (v, b)) in x.row(i).iter().zip(&x_bar).enumerate() {
                xc[k] = v - b;
            }
            let yc = y[i] - y_bar;
            for a in 0..q {
                xty[a] += xc[a] * yc;
                for b in 0..=a {
                    gram[(a, b)] += xc[a] * xc[b];
                }
            }
        }
        for a in 0..q {
            for b in 0..a {
                gram[(b, a)] = gram[(a, b)];
            }
        }
        let svd = gram.svd(true, true);
        let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let beta = if s_max > 0.0 {
            svd.solve(&xty, 1e-12 * s_max).expect("U and V were computed")
        } else {
            DVector::zeros(q)
        };
        for &i in &idx {
            let pred: f64 = x.row(i).iter().zip(&x_bar).zip(beta.iter()).map(|((v, b), c)| (v - b) * c).sum();
            out[i] = y[i] - y_bar - pred;
        }
    }
    out
}
