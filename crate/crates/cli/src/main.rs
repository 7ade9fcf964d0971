//! `llip`: batch front end for lattice Lipschitz operators on grids.
//!
//! Results go to stdout as JSON, diagnostics to stderr. Exit status is 0 on
//! success, 1 when a verification fails and 2 on bad input.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use llip_core::extension::ExtensionMethod;
use llip_core::{Config, Metric};

#[derive(Parser, Debug)]
#[command(
    name = "llip",
    version,
    about = "Lattice Lipschitz operators on discretized C(K)"
)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, env = "LLIP_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    zero_tol: Option<f64>,
    #[arg(long, global = true)]
    consistency_tol: Option<f64>,
    #[arg(long, global = true)]
    continuity_threshold_factor: Option<f64>,
    #[arg(long, global = true)]
    adjacency_radius_factor: Option<f64>,
    #[arg(long, global = true)]
    max_breakpoints: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut Config) {
        if let Some(v) = self.zero_tol {
            cfg.zero_tol = v;
        }
        if let Some(v) = self.consistency_tol {
            cfg.consistency_tol = v;
        }
        if let Some(v) = self.continuity_threshold_factor {
            cfg.continuity_threshold_factor = v;
        }
        if let Some(v) = self.adjacency_radius_factor {
            cfg.adjacency_radius_factor = v;
        }
        if let Some(v) = self.max_breakpoints {
            cfg.max_breakpoints = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Chebyshev,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Chebyshev => Metric::Chebyshev,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Mcshane,
    Whitney,
    Midpoint,
}

impl From<MethodArg> for ExtensionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mcshane => ExtensionMethod::Mcshane,
            MethodArg::Whitney => ExtensionMethod::Whitney,
            MethodArg::Midpoint => ExtensionMethod::Midpoint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundMode {
    Ratio,
    Minimal,
    Constant,
    Majorant,
    Verify,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an interval grid or validate a grid file.
    Grid {
        /// Interval endpoints and point count, e.g. `--interval 0 1 401`.
        #[arg(long, num_args = 3, value_names = ["A", "B", "N"], conflicts_with = "input", required_unless_present = "input", allow_negative_numbers = true)]
        interval: Option<Vec<f64>>,
        /// Grid as JSON or CSV (one row of coordinates per point).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "euclidean")]
        metric: MetricArg,
    },
    /// Apply an operator to a function.
    Eval {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Bound functions of a sampled operator.
    Bound {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        source: PathBuf,
        #[arg(long, value_enum)]
        mode: BoundMode,
        /// Candidate bound for `verify`.
        #[arg(long, required_if_eq("mode", "verify"))]
        phi: Option<PathBuf>,
        /// Lipschitz constant of the majorant.
        #[arg(long, required_if_eq("mode", "majorant"))]
        lipschitz: Option<f64>,
        /// Sample indices for `ratio`.
        #[arg(long, num_args = 2, value_names = ["I", "J"], default_values_t = [0usize, 1])]
        pair: Vec<usize>,
        /// Largest violation accepted by `verify` and `majorant`.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Exact norm and probe estimate of an operator.
    Norms {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        op: PathBuf,
        /// Random constant probe pairs added to the witness pair.
        #[arg(long, default_value_t = 64)]
        probes: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [-10.0, 10.0], allow_negative_numbers = true)]
        probe_range: Vec<f64>,
    },
    /// Extend a sampled operator to a new input.
    Extend {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "mcshane")]
        method: MethodArg,
        /// Report continuity, re-verify the bound and include the Whitney-McShane gap.
        #[arg(long)]
        diagnose: bool,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Compose two operators, `left ∘ right`.
    Compose {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Write the composed operator here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check_submult: bool,
    },
    /// Convert between tensor and superposition form.
    Tensor {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in reference cases.
    Selftest,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn resolve_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg = io::load_config(cli.config.as_deref())?;
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve_config(&cli).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
