//! Numerical-integration route to `L_{n,theta}` for `theta` in {1, 2}.
//!
//! This evaluates the weighted integral of `|phi_1(t)|^2 - |phi_0(t)|^2`
//! directly from empirical characteristic functions, without the closed-form
//! kernel identity, and exists to cross-check [`crate::stats::l_theta_stat`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sample::{ExperimentSample, Theta};
use crate::stats::ecf;

const GL_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Minimum number of Gauss-Legendre nodes on the half line (`theta = 2`).
    pub nodes: usize,
    /// Truncation point of the Cauchy-weighted integral (`theta = 1`).
    pub cauchy_cutoff: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes: 256, cauchy_cutoff: 2.0e4 }
    }
}

/// Nodes and weights of the 16-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre() -> ([f64; GL_POINTS], [f64; GL_POINTS]) {
    let n = GL_POINTS;
    let mut x = [0.0; GL_POINTS];
    let mut w = [0.0; GL_POINTS];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn composite_gl(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre();
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let panel: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * f(mid + half * xi)).sum();
        total += half * panel;
    }
    total
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// `sum_i sum_j 1{v_i == v_j}`: the limit of `m^2 |phi(t)|^2` averaged over
/// large `t`.
fn tie_pairs(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut run = 1.0;
    for w in s.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
        } else {
            total += run * run;
            run = 1.0;
        }
    }
    total + run * run
}

/// Integral of `(|phi_1|^2 - |phi_0|^2) w_theta` for the normal (variance 2,
/// `theta = 2`) or Cauchy (`theta = 1`) weight.
pub fn l_quadrature_oracle(
    sample: &ExperimentSample,
    theta: Theta,
    quad: QuadratureConfig,
) -> Result<f64> {
    if quad.nodes < 128 {
        return Err(Error::invalid("quadrature needs at least 128 nodes"));
    }
    let treated = sample.group(true);
    let control = sample.group(false);
    match theta.value() {
        2.0 => Ok(normal_weighted(&treated, &control, quad.nodes)),
        1.0 => {
            if !(quad.cauchy_cutoff >= 100.0) {
                return Err(Error::invalid("Cauchy cutoff must be at least 100"));
            }
            Ok(cauchy_weighted(&treated, &control, quad.cauchy_cutoff))
        }
        t => Err(Error::invalid(format!(
            "quadrature oracle supports theta in {{1, 2}}, got {t}"
        ))),
    }
}

fn normal_weighted(treated: &[f64], control: &[f64], nodes: usize) -> f64 {
    // mass of N(0, 2) beyond |t| = 10 is erfc(5) ~ 1.5e-12
    const CUTOFF: f64 = 10.0;
    let a_max = spread(treated).max(spread(control));
    let panels = (nodes.div_ceil(GL_POINTS)).max((CUTOFF * a_max / 6.0).ceil() as usize);
    let norm = 1.0 / (2.0 * PI.sqrt());
    let integrand = |t: f64| {
        let g = ecf(treated, t).expect("non-empty").modulus_sq()
            - ecf(control, t).expect("non-empty").modulus_sq();
        g * norm * (-t * t / 4.0).exp()
    };
    2.0 * composite_gl(0.0, CUTOFF, panels, integrand)
}

/// Smooth step: 1 on [0, cut/2], 0 beyond `cut`, C-infinity in between.
fn taper(t: f64, cut: f64) -> f64 {
    let half = 0.5 * cut;
    let u = (t.abs() - half) / half;
    if u <= 0.0 {
        return 1.0;
    }
    if u >= 1.0 {
        return 0.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    f(1.0 - u) / (f(1.0 - u) + f(u))
}

/// Running `|phi(k h)|^2` for `k = 0, 1, ...` by complex rotation, reset
/// to direct evaluation periodically to stop drift.
struct EcfSweep {
    values: Vec<f64>,
    step: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rot_cos: Vec<f64>,
    rot_sin: Vec<f64>,
    k: usize,
}

impl EcfSweep {
    const RESET: usize = 512;

    fn new(values: &[f64], step: f64) -> Self {
        let centre = values.iter().sum::<f64>() / values.len() as f64;
        let values: Vec<f64> = values.iter().map(|v| v - centre).collect();
        let (rot_sin, rot_cos) = values.iter().map(|v| (step * v).sin_cos()).unzip();
        let m = values.len();
        EcfSweep {
            values,
            step,
            cos: vec![1.0; m],
            sin: vec![0.0; m],
            rot_cos,
            rot_sin,
            k: 0,
        }
    }

    fn modulus_sq(&self) -> f64 {
        let re: f64 = self.cos.iter().sum();
        let im: f64 = self.sin.iter().sum();
        let m = self.values.len() as f64;
        (re * re + im * im) / (m * m)
    }

    fn advance(&mut self) {
        self.k += 1;
        if self.k % Self::RESET == 0 {
            let t = self.k as f64 * self.step;
            for (i, v) in self.values.iter().enumerate() {
                let (s, c) = (t * v).sin_cos();
                self.cos[i] = c;
                self.sin[i] = s;
            }
        } else {
            for i in 0..self.values.len() {
                let (c, s) = (self.cos[i], self.sin[i]);
                let (rc, rs) = (self.rot_cos[i], self.rot_sin[i]);
                self.cos[i] = c * rc - s * rs;
                self.sin[i] = s * rc + c * rs;
            }
        }
    }
}

fn cauchy_weighted(treated: &[f64], control: &[f64], cut: f64) -> f64 {
    let weight = |t: f64| 1.0 / (PI * (1.0 + t * t));
    // The tapered integrand's spectrum decays like exp(-|omega| + a_max),
    // so this step keeps trapezoid aliasing below exp(-45).
    let a_max = spread(treated).max(spread(control));
    let step = 2.0 * PI / (a_max + 45.0);
    let count = (cut / step).ceil() as usize;

    let mut st = EcfSweep::new(treated, step);
    let mut sc = EcfSweep::new(control, step);
    let mut body = 0.5 * (st.modulus_sq() - sc.modulus_sq()) * weight(0.0);
    for k in 1..=count {
        st.advance();
        sc.advance();
        let t = k as f64 * step;
        body += (st.modulus_sq() - sc.modulus_sq()) * weight(t) * taper(t, cut);
    }
    let tapered = 2.0 * step * body;

    // What the taper removed: |phi|^2 averages to its tie mass at large t.
    let n1 = treated.len() as f64;
    let n0 = control.len() as f64;
    let limit = tie_pairs(treated) / (n1 * n1) - tie_pairs(control) / (n0 * n0);
    let transition = composite_gl(0.5 * cut, cut, 64, |t| weight(t) * (1.0 - taper(t, cut)));
    let beyond = 0.5 - cut.atan() / PI;
    tapered + limit * 2.0 * (transition + beyond)
}
