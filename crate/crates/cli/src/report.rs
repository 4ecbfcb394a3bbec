use hetfx::{Diagnostics, Method, StatisticKind, TestReport};
use serde::Serialize;

use crate::ingest::IngestSummary;

/// ECP in percentage points to two decimals, ties to even. Resampled ECPs
/// are `k / B`, so the rounding is done in integers to keep exact ties.
pub fn ecp_pct(ecp: f64, replicates: usize) -> f64 {
    if replicates == 0 {
        return (ecp * 1e4).round_ties_even() / 100.0;
    }
    let b = replicates as u128;
    let k = (ecp * replicates as f64).round() as u128;
    let (mut q, r) = (10_000 * k / b, 10_000 * k % b);
    if 2 * r > b || (2 * r == b && q % 2 == 1) {
        q += 1;
    }
    q as f64 / 100.0
}

fn method_name(kind: StatisticKind, method: Method) -> &'static str {
    if kind == StatisticKind::TStat {
        return "normal";
    }
    method.as_str()
}

#[derive(Debug, Serialize)]
pub struct JsonReport<'a> {
    pub statistic: &'static str,
    pub theta: f64,
    pub observed: f64,
    pub ecp_pct: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub method: &'static str,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residualization: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub n: usize,
    pub n_treated: usize,
    pub diagnostics: &'a Diagnostics,
    pub data: &'a IngestSummary,
}

impl<'a> JsonReport<'a> {
    pub fn new(r: &'a TestReport, n: usize, n_treated: usize, data: &'a IngestSummary) -> Self {
        JsonReport {
            statistic: r.statistic.as_str(),
            theta: r.theta,
            observed: r.observed,
            ecp_pct: ecp_pct(r.ecp, r.replicates),
            p_value: r.p_value,
            reject: r.reject,
            alpha: r.alpha,
            method: method_name(r.statistic, r.method),
            b: r.replicates,
            seed: r.seed,
            m: r.tau_grid.as_ref().map(Vec::len),
            ci_level: r.ci_level,
            residualization: r.residualization.map(|m| m.as_str()),
            tau: r.tau,
            n,
            n_treated,
            diagnostics: &r.diagnostics,
            data,
        }
    }

    /// One header line and one value line.
    pub fn to_csv(&self) -> String {
        let d = self.diagnostics;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let fields: Vec<(&str, String)> = vec![
            ("statistic", self.statistic.to_string()),
            ("theta", self.theta.to_string()),
            ("observed", self.observed.to_string()),
            ("ecp_pct", format!("{:.2}", self.ecp_pct)),
            ("p_value", self.p_value.to_string()),
            ("reject", self.reject.to_string()),
            ("alpha", self.alpha.to_string()),
            ("method", self.method.to_string()),
            ("B", self.b.to_string()),
            ("seed", self.seed.to_string()),
            ("m", opt(self.m.map(|v| v.to_string()))),
            ("ci_level", opt(self.ci_level.map(|v| v.to_string()))),
            ("residualization", opt(self.residualization.map(str::to_string))),
            ("tau", opt(self.tau.map(|v| v.to_string()))),
            ("n", self.n.to_string()),
            ("n_treated", self.n_treated.to_string()),
            ("diag_min", d.min.to_string()),
            ("diag_max", d.max.to_string()),
            ("diag_mean", d.mean.to_string()),
            ("diag_sd", d.sd.to_string()),
            ("diag_q025", d.q025.to_string()),
            ("diag_q500", d.q500.to_string()),
            ("diag_q975", d.q975.to_string()),
            ("zero_variance", d.zero_variance.to_string()),
            ("rows_dropped", self.data.rows_dropped.to_string()),
        ];
        let (head, vals): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
        format!("{}\n{}\n", head.join(","), vals.join(","))
    }
}
