//! Command-line front end: verification suites, extended-MLE fits, KL
//! projections, risk decompositions, the Hardy-Weinberg figure data, and the
//! competitor arena. Reports are deterministic: the same flags and seed make
//! byte-identical output.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod compete_cmd;
mod figure;
mod fit;
mod json;
mod params;
mod risk_cmd;
mod verify_cmd;

#[derive(Parser)]
#[command(
    name = "klrisk",
    version,
    about = "Exact KL risk decompositions on finite sample spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity verification suites for one family
    Verify {
        /// Family name (binomial:N, poisson:XMAX, trinomial:N, hw:N) or a
        /// family JSON file
        #[arg(long)]
        family: String,
        /// i.i.d. sample size
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// number of randomized estimators per suite
        #[arg(long, default_value_t = 20)]
        estimators: usize,
        /// generator grid, display scale (comma-separated; pairs use `/`)
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Fit the extended MLE to observed outcomes
    Mle {
        #[arg(long)]
        family: String,
        /// one observed outcome label per flag (e.g. --data 4, --data 2,2,2)
        #[arg(long, required = true)]
        data: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Project a serialized distribution onto the family
    Project {
        #[arg(long)]
        family: String,
        /// distribution JSON file
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// KL risk decomposition of an estimator against a generator
    Risk {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// generator success/allele probability (binomial, hw)
        #[arg(long)]
        theta: Option<f64>,
        /// generator rate (poisson)
        #[arg(long)]
        lambda: Option<f64>,
        /// generator cell probabilities `p1/p2` (trinomial)
        #[arg(long)]
        pi: Option<String>,
        /// generator natural coordinates `t1/t2` (any family)
        #[arg(long)]
        natural: Option<String>,
        /// comparison-member grid, display scale
        #[arg(long)]
        grid: Option<String>,
        /// estimator JSON file (defaults to the extended MLE)
        #[arg(long)]
        estimator: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Hardy-Weinberg simplex curves (model, KL mean, divergence) as CSV
    HwFigure {
        /// number of trials of the Hardy-Weinberg model
        #[arg(long, default_value_t = 6)]
        n: u64,
        /// allele-probability grid (comma-separated, inside (0,1))
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Arena: mean-matched competitors against the extended MLE
    Compete {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// competitors per (epsilon, seed) pair
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// mixing weights, comma-separated
        #[arg(long, default_value = "0.5")]
        epsilon: String,
        /// seeds, comma-separated
        #[arg(long, default_value = "1")]
        seed: String,
        /// generator grid, display scale
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    let mut text = content.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let (content, pass, out) = match cli.command {
        Cmd::Verify {
            family,
            n,
            seed,
            estimators,
            grid,
            out,
            format,
        } => {
            let (content, pass) = verify_cmd::run(&verify_cmd::VerifyArgs {
                family,
                n,
                seed,
                estimators,
                grid,
                format,
            })?;
            (content, pass, out)
        }
        Cmd::Mle {
            family,
            data,
            out,
            format,
        } => {
            let (content, pass) = fit::run_mle(&fit::MleArgs { family, data, format })?;
            (content, pass, out)
        }
        Cmd::Project {
            family,
            input,
            out,
            format,
        } => {
            let (content, pass) = fit::run_project(&fit::ProjectArgs { family, input, format })?;
            (content, pass, out)
        }
        Cmd::Risk {
            family,
            n,
            theta,
            lambda,
            pi,
            natural,
            grid,
            estimator,
            out,
            format,
        } => {
            let (content, pass) = risk_cmd::run(&risk_cmd::RiskArgs {
                family,
                n,
                theta,
                lambda,
                pi,
                natural,
                grid,
                estimator,
                format,
            })?;
            (content, pass, out)
        }
        Cmd::HwFigure { n, grid, out, format } => {
            let (content, pass) = figure::run(&figure::HwFigureArgs { n, grid, format })?;
            (content, pass, out)
        }
        Cmd::Compete {
            family,
            n,
            k,
            epsilon,
            seed,
            grid,
            out,
            format,
        } => {
            let (content, pass) = compete_cmd::run(&compete_cmd::CompeteArgs {
                family,
                n,
                k,
                epsilon,
                seed,
                grid,
                format,
            })?;
            (content, pass, out)
        }
    };
    write_output(&out, &content)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
