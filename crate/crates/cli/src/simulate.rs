use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hetfx::{
    run_size_power, size_adjusted_power, CellResult, DgpConfig, Family, Method, MonteCarloResult,
    ShiftMode, StatisticKind, TestSpec, Variation,
};
use serde::Serialize;

use crate::config::SimulateOptions;
use crate::OutputError;

struct Preset {
    families: Vec<Family>,
    sizes: Vec<usize>,
    sigma_tau: Vec<f64>,
    tests: Vec<&'static str>,
    size_adjusted: bool,
}

fn preset(name: &str) -> Result<Preset> {
    let nocov = Family::NO_COVARIATES.to_vec();
    Ok(match name {
        "table1" => Preset {
            families: nocov,
            sizes: vec![50, 80, 100, 200, 1000],
            sigma_tau: vec![0.0],
            tests: vec!["l_theta/boot", "l_theta/perm", "l_theta/ciperm", "hkz/boot", "hkz/perm", "hkz/ciperm"],
            size_adjusted: false,
        },
        "table2" => Preset {
            families: nocov,
            sizes: vec![50, 100, 400, 800, 1000],
            sigma_tau: vec![0.2, 0.5],
            tests: vec!["l_theta/ciperm", "hkz/ciperm"],
            size_adjusted: false,
        },
        "table3" => Preset {
            families: vec![Family::CovariateLinear],
            sizes: vec![200, 500, 1000, 2000, 5000],
            sigma_tau: vec![0.0],
            tests: vec!["d_theta/covperm"],
            size_adjusted: false,
        },
        "table4" => Preset {
            families: nocov,
            sizes: vec![50, 100, 400, 800, 1000],
            sigma_tau: vec![0.2, 0.5],
            tests: vec!["l_theta/perm", "hkz/perm"],
            size_adjusted: true,
        },
        other => bail!("unknown preset {other:?}; expected table1, table2, table3 or table4"),
    })
}

fn parse_test(label: &str, b: usize) -> Result<TestSpec> {
    let (stat, method) = label
        .split_once('/')
        .ok_or_else(|| anyhow!("test {label:?} should look like statistic/method, e.g. l_theta/perm"))?;
    let kind = [StatisticKind::LTheta, StatisticKind::Hkz, StatisticKind::DTheta, StatisticKind::TStat]
        .into_iter()
        .find(|k| k.as_str() == stat)
        .ok_or_else(|| anyhow!("unknown statistic {stat:?} in test {label:?}"))?;
    let method = [Method::Bootstrap, Method::Permutation, Method::CiPermutation, Method::CovariatePermutation]
        .into_iter()
        .find(|m| m.as_str() == method)
        .ok_or_else(|| anyhow!("unknown method {method:?} in test {label:?}"))?;
    Ok(TestSpec::new(kind, method, b))
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    preset: Option<&'a str>,
    size_adjusted: bool,
    replications: usize,
    #[serde(rename = "B")]
    b: usize,
    master_seed: u64,
    shift: ShiftMode,
    elapsed_seconds: f64,
    cells: &'a [CellResult],
}

pub fn run(opts: SimulateOptions) -> Result<PathBuf> {
    let base = match &opts.preset {
        Some(name) => preset(name)?,
        None => Preset { families: vec![], sizes: vec![], sigma_tau: vec![0.0], tests: vec![], size_adjusted: false },
    };
    let families = match &opts.families {
        Some(f) => f.iter().map(|s| s.parse::<Family>()).collect::<hetfx::Result<Vec<_>>>()?,
        None => base.families,
    };
    let sizes = opts.sizes.clone().unwrap_or(base.sizes);
    let sigmas = opts.sigma_tau.clone().unwrap_or(base.sigma_tau);
    let reps = opts.reps.unwrap_or(2000);
    let b = opts.b.unwrap_or(2000);
    let seed = opts.seed.unwrap_or(0);
    let labels: Vec<String> = match &opts.tests {
        Some(t) => t.clone(),
        None => base.tests.iter().map(|s| s.to_string()).collect(),
    };
    let shift: ShiftMode = opts.shift.map_or(ShiftMode::default(), Into::into);
    let mut tests = labels.iter().map(|l| parse_test(l, b)).collect::<Result<Vec<_>>>()?;
    for t in &mut tests {
        t.shift_mode = shift;
    }

    let mut grid = Vec::new();
    for &family in &families {
        for &n in &sizes {
            if family == Family::CovariateLinear {
                grid.extend(Variation::ALL.iter().map(|&v| DgpConfig::cov(n, v, 0)));
            } else {
                grid.extend(sigmas.iter().map(|&s| DgpConfig::nocov(family, n, s, 0)));
            }
        }
    }
    if grid.is_empty() || tests.is_empty() {
        bail!("the simulation grid is empty: give a preset or families, sizes and tests");
    }

    let result: MonteCarloResult = if base.size_adjusted {
        size_adjusted_power(&grid, &tests, reps, seed)?
    } else {
        run_size_power(&grid, &tests, reps, seed)?
    };

    let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(OutputError::from)?;
    write_csv(&dir.join("cells.csv"), &result.cells)?;
    let out = SimulationOutput {
        preset: opts.preset.as_deref(),
        size_adjusted: base.size_adjusted,
        replications: reps,
        b,
        master_seed: seed,
        shift,
        elapsed_seconds: result.elapsed_seconds,
        cells: &result.cells,
    };
    let json = serde_json::to_string_pretty(&out).context("cannot serialize results")?;
    std::fs::write(dir.join("cells.json"), json + "\n").map_err(OutputError::from)?;
    let table = text_table(&result.cells, sigmas.len() > 1);
    std::fs::write(dir.join("table.txt"), &table).map_err(OutputError::from)?;
    print!("{table}");
    Ok(dir)
}

fn write_csv(path: &Path, cells: &[CellResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| OutputError(e.into()))?;
    for c in cells {
        w.serialize(c).map_err(|e| OutputError(e.into()))?;
    }
    w.flush().map_err(OutputError::from)?;
    Ok(())
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

/// Rejection rates in percentage points, one panel per outcome family with
/// sample sizes down the rows.
pub fn text_table(cells: &[CellResult], label_sigma: bool) -> String {
    let column = |c: &CellResult| {
        let mut key = String::new();
        if let (Some(s), Some(i)) = (c.systematic, c.idiosyncratic) {
            key.push_str(Variation { systematic: s, idiosyncratic: i }.label());
            key.push(' ');
        } else if label_sigma {
            let _ = write!(key, "s={} ", c.sigma_tau);
        }
        key.push_str(&c.test);
        key
    };
    let mut panels = Vec::new();
    for c in cells {
        push_unique(&mut panels, c.family);
    }
    let mut out = String::new();
    for family in panels {
        let rows: Vec<&CellResult> = cells.iter().filter(|c| c.family == family).collect();
        let (mut cols, mut sizes) = (Vec::new(), Vec::new());
        for c in &rows {
            push_unique(&mut cols, column(c));
            push_unique(&mut sizes, c.n);
        }
        let width = cols.iter().map(String::len).max().unwrap_or(0).max(6);
        let _ = writeln!(out, "Panel: {}", family.as_str());
        let _ = write!(out, "{:>6}", "n");
        for col in &cols {
            let _ = write!(out, "  {col:>width$}");
        }
        out.push('\n');
        for n in sizes {
            let _ = write!(out, "{n:>6}");
            for col in &cols {
                match rows.iter().find(|c| c.n == n && &column(c) == col) {
                    Some(c) => {
                        let _ = write!(out, "  {:>width$.1}", 100.0 * c.rejection_rate);
                    }
                    None => {
                        let _ = write!(out, "  {:>width$}", "");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
