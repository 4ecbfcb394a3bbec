//! Fast sums of the Gaussian kernel `exp(-(y - x)^2)` over one-dimensional
//! point sets.
//!
//! Sources are binned into unit-width boxes. Inside a box with center `c`,
//! writing `s = x - c` and `t = y - c`,
//!
//! ```text
//! exp(-(t - s)^2) = exp(-t^2) * exp(-s^2) * sum_k (2 t s)^k / k!
//! ```
//!
//! so each box is summarized by `ORDER` moments and a target costs one short
//! polynomial per nearby box instead of one exponential per source. With
//! `|s| <= 1/2` the truncation error per source is below
//! `exp(-t^2 + |t|) |t|^ORDER / ORDER!`, which is under `1e-17` for every `t`.
//! Boxes farther than `CUTOFF` from a target contribute less than `1e-24`
//! per source and are skipped.

const ORDER: usize = 28;
const WIDTH: f64 = 1.0;
const CUTOFF: f64 = 8.5;

#[derive(Debug, Clone)]
struct Cell {
    center: f64,
    coeffs: [f64; ORDER],
}

/// Moment summary of a set of source points for Gaussian kernel sums.
#[derive(Debug, Clone)]
pub struct GaussianExpansion {
    cells: Vec<Cell>,
}

impl GaussianExpansion {
    pub fn new(sources: &[f64]) -> Self {
        if sources.is_empty() {
            return GaussianExpansion { cells: Vec::new() };
        }
        let origin = sources.iter().copied().fold(f64::INFINITY, f64::min);
        let mut keyed: Vec<(u64, f64)> = sources
            .iter()
            .map(|&x| (((x - origin) / WIDTH).floor() as u64, x))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        // 2^k / k!
        let mut scale = [0.0; ORDER];
        scale[0] = 1.0;
        for k in 1..ORDER {
            scale[k] = scale[k - 1] * 2.0 / k as f64;
        }

        let mut cells: Vec<Cell> = Vec::new();
        let mut current: Option<u64> = None;
        for &(key, x) in &keyed {
            if current != Some(key) {
                current = Some(key);
                cells.push(Cell {
                    center: origin + (key as f64 + 0.5) * WIDTH,
                    coeffs: [0.0; ORDER],
                });
            }
            let cell = cells.last_mut().expect("cell pushed above");
            let s = x - cell.center;
            let mut term = (-(s * s)).exp();
            for c in cell.coeffs.iter_mut() {
                *c += term;
                term *= s;
            }
        }
        for cell in &mut cells {
            for (c, f) in cell.coeffs.iter_mut().zip(&scale) {
                *c *= f;
            }
        }
        GaussianExpansion { cells }
    }

    /// `sum_j exp(-(y - x_j)^2)` over the sources.
    pub fn eval(&self, y: f64) -> f64 {
        let lo = self.cells.partition_point(|c| c.center < y - CUTOFF);
        let mut total = 0.0;
        for cell in self.cells[lo..].iter().take_while(|c| c.center <= y + CUTOFF) {
            let t = y - cell.center;
            let mut poly = 0.0;
            for &a in cell.coeffs.iter().rev() {
                poly = poly * t + a;
            }
            total += (-(t * t)).exp() * poly;
        }
        total
    }

    /// `sum_i sum_j exp(-(targets_i + shift - x_j)^2)`.
    pub fn sum_over(&self, targets: &[f64], shift: f64) -> f64 {
        targets.iter().map(|&y| self.eval(y + shift)).sum()
    }
}
