mod config;
mod ingest;
mod report;
mod simulate;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hetfx::{
    residualize_group_mean, residualize_linear, residualize_nw, run_test, Method, NWConfig,
    ResamplingPlan, ResidualMethod, StatisticKind, Theta,
};
use serde::Serialize;

use config::{Format, ResidualizeOptions, SimulateOptions, StatArg, TestOptions};
use ingest::{ingest_csv, Bindings};
use report::JsonReport;

/// Failure to write results. Mapped to its own exit code.
#[derive(Debug)]
pub struct OutputError(pub Box<dyn std::error::Error + Send + Sync>);

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cannot write output: {}", self.0)
    }
}

impl std::error::Error for OutputError {}

impl From<std::io::Error> for OutputError {
    fn from(e: std::io::Error) -> Self {
        OutputError(Box::new(e))
    }
}

#[derive(Parser)]
#[command(name = "hetfx", version, about = "Tests for treatment effect heterogeneity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test the null of a constant treatment effect on a CSV file
    Test {
        /// TOML file with defaults for any of the flags
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: TestOptions,
    },
    /// Write covariate-adjusted residuals
    Residualize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: ResidualizeOptions,
    },
    /// Monte Carlo size and power study
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: SimulateOptions,
    },
}

fn with_config<T: for<'de> serde::Deserialize<'de>>(path: Option<&Path>) -> Result<Option<T>> {
    path.map(config::load).transpose()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(OutputError::from)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(OutputError::from)?;
            stdout.flush().map_err(OutputError::from)?;
        }
    }
    Ok(())
}

fn bindings(outcome: Option<String>, treatment: Option<String>, covariates: Option<Vec<String>>) -> Result<Bindings> {
    Ok(Bindings {
        outcome: outcome.context("--outcome is required")?,
        treatment: treatment.context("--treatment is required")?,
        covariates: covariates.unwrap_or_default().into_iter().filter(|c| !c.is_empty()).collect(),
    })
}

fn report_drops(summary: &ingest::IngestSummary) {
    if summary.rows_dropped > 0 {
        let cols: Vec<String> =
            summary.missing.iter().filter(|(_, &k)| k > 0).map(|(c, k)| format!("{c}: {k}")).collect();
        eprintln!(
            "hetfx: dropped {} of {} rows with missing values ({})",
            summary.rows_dropped,
            summary.rows_read,
            cols.join(", ")
        );
    }
}

fn cmd_test(opts: TestOptions) -> Result<()> {
    let input = opts.input.clone().context("--input is required")?;
    let b = bindings(opts.outcome, opts.treatment, opts.covariates)?;
    let stat = opts.stat.unwrap_or(StatArg::LTheta);
    let kind = StatisticKind::from(stat);
    if kind == StatisticKind::DTheta && b.covariates.is_empty() {
        bail!("d_theta needs at least one covariate column (--covariates)");
    }
    let method = match opts.method {
        Some(m) => Method::from(m),
        None if kind == StatisticKind::DTheta => Method::CovariatePermutation,
        None => Method::Permutation,
    };
    let theta = Theta::new(opts.theta.unwrap_or(2.0))?;
    let mut plan = ResamplingPlan::new(method, opts.b.unwrap_or(2000), opts.seed.unwrap_or(0))
        .with_alpha(opts.alpha.unwrap_or(0.05))
        .with_grid(opts.m.unwrap_or(21), opts.ci_level.unwrap_or(0.999));
    if let Some(r) = opts.residualization {
        plan.residualization = r.into();
    }
    if let Some(s) = opts.shift {
        plan.shift_mode = s.into();
    }

    let (sample, summary) = ingest_csv(&input, &b)?;
    report_drops(&summary);
    let result = run_test(&sample, kind, theta, &plan)?;
    let json = JsonReport::new(&result, sample.len(), sample.n_treated(), &summary);
    let text = match opts.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
        Format::Csv => json.to_csv(),
    };
    emit(opts.out.as_deref(), &text)
}

#[derive(Serialize)]
struct ResidualOutput<'a> {
    method: &'static str,
    n: usize,
    fallbacks: usize,
    treatments: &'a [bool],
    residuals: &'a [f64],
}

fn cmd_residualize(opts: ResidualizeOptions) -> Result<()> {
    let input = opts.input.clone().context("--input is required")?;
    let b = bindings(opts.outcome, opts.treatment, opts.covariates)?;
    let method: ResidualMethod = opts.method.map_or(ResidualMethod::LinearInteraction, Into::into);
    if method != ResidualMethod::GroupMean && b.covariates.is_empty() {
        bail!("{} residualization needs covariate columns (--covariates)", method.as_str());
    }
    let (sample, summary) = ingest_csv(&input, &b)?;
    report_drops(&summary);
    let res = match method {
        ResidualMethod::LinearInteraction => residualize_linear(&sample)?,
        ResidualMethod::NadarayaWatson => residualize_nw(&sample, &NWConfig::default())?,
        ResidualMethod::GroupMean => residualize_group_mean(&sample)?,
    };
    let text = match opts.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("treatment,residual\n");
            for (&d, r) in res.treatments().iter().zip(res.residuals()) {
                s.push_str(&format!("{},{}\n", u8::from(d), r));
            }
            s
        }
        Format::Json => {
            let out = ResidualOutput {
                method: method.as_str(),
                n: res.residuals().len(),
                fallbacks: res.fallbacks(),
                treatments: res.treatments(),
                residuals: res.residuals(),
            };
            serde_json::to_string_pretty(&out)? + "\n"
        }
    };
    emit(opts.out.as_deref(), &text)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HETFX_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("HETFX_THREADS must be a non-negative integer, got {raw:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Test { config, opts } => {
            let file = with_config(config.as_deref())?;
            cmd_test(file.map_or(opts.clone(), |f| opts.merge(f)))
        }
        Command::Residualize { config, opts } => {
            let file = with_config(config.as_deref())?;
            cmd_residualize(file.map_or(opts.clone(), |f| opts.merge(f)))
        }
        Command::Simulate { config, opts } => {
            let file = with_config(config.as_deref())?;
            let dir = simulate::run(file.map_or(opts.clone(), |f| opts.merge(f)))?;
            eprintln!("hetfx: results written to {}", dir.display());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<OutputError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<hetfx::Error>() {
            return match e {
                hetfx::Error::DegenerateSample(_) | hetfx::Error::DegenerateVariance(_) => 2,
                hetfx::Error::InvalidArgument(_) | hetfx::Error::Precondition(_) => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("hetfx: error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
