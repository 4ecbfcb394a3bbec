//! Pairwise exp-kernel sums.
//!
//! Every sum here walks rows in ascending unit order and adds each row's
//! partial sum into the total in that same order, so a result never depends
//! on how many worker threads computed the rows.

use rayon::prelude::*;

use crate::sample::Theta;

/// Below this many rows the sums run on the calling thread.
const PARALLEL_ROWS: usize = 2048;

fn ordered_row_sum(rows: usize, row: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    if rows >= PARALLEL_ROWS {
        let partial: Vec<f64> = (0..rows).into_par_iter().map(row).collect();
        partial.iter().sum()
    } else {
        (0..rows).map(row).sum()
    }
}

/// `sum_i sum_j exp(-|v_i - v_j|^theta)` over all ordered pairs, diagonal
/// included; evaluated as `m + 2 * sum_{i<j}`.
pub fn within_sum(values: &[f64], theta: Theta) -> f64 {
    let off = ordered_row_sum(values.len(), |i| {
        let vi = values[i];
        values[i + 1..].iter().map(|&vj| theta.kernel(vi - vj)).sum()
    });
    values.len() as f64 + 2.0 * off
}

/// `sum_i sum_j exp(-|a_i + shift - b_j|^theta)`.
pub fn cross_sum(a: &[f64], b: &[f64], shift: f64, theta: Theta) -> f64 {
    ordered_row_sum(a.len(), |i| {
        let ai = a[i] + shift;
        b.iter().map(|&bj| theta.kernel(ai - bj)).sum()
    })
}

/// Dense symmetric matrix of kernel values between all units of a sample.
///
/// Used by the resampling engines: one `n^2` pass of exponentials, then every
/// replicate only gathers entries. Group sums computed from index lists in
/// ascending order reproduce [`within_sum`] on the extracted values exactly.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(values: &[f64], theta: Theta) -> Self {
        let n = values.len();
        let mut data = vec![1.0; n * n];
        for i in 0..n {
            let vi = values[i];
            for j in i + 1..n {
                let k = theta.kernel(vi - values[j]);
                data[i * n + j] = k;
                data[j * n + i] = k;
            }
        }
        KernelMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Within-group sum for the multiset of units in `idx` (repeats allowed,
    /// a repeated unit pairs with itself at kernel value one).
    pub fn within_sum(&self, idx: &[usize]) -> f64 {
        let mut off = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            off += idx[a + 1..].iter().map(|&j| row[j]).sum::<f64>();
        }
        idx.len() as f64 + 2.0 * off
    }

    /// Within-group sum where distinct unit `idx[a]` appears `counts[a]` times.
    pub fn weighted_within_sum(&self, idx: &[usize], counts: &[u32]) -> f64 {
        debug_assert_eq!(idx.len(), counts.len());
        let mut diag = 0.0;
        let mut off = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let ca = f64::from(counts[a]);
            diag += ca * ca;
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let partial: f64 = idx[a + 1..]
                .iter()
                .zip(&counts[a + 1..])
                .map(|(&j, &cb)| f64::from(cb) * row[j])
                .sum();
            off += ca * partial;
        }
        diag + 2.0 * off
    }
}
