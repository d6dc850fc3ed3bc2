//! `nlsq`: sweeps, certification and synthetic homodyne runs.
//!
//! Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 I/O error.

mod commands;
mod error;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "nlsq",
    version,
    about = "Nonlinear squeezing witnesses for single-mode states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Fock levels (default 60 for generated states, 25 for reconstructions)
    #[arg(long)]
    pub n_levels: Option<usize>,
    /// Optimizer budget as starts:evals:tol
    #[arg(long, default_value = "32:4000:1e-10")]
    pub budget: String,
    /// Seed for restarts, sampling and bootstrap resampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// ξ along an alpha sweep of a photon-added coherent state
    Curve {
        /// State spec, e.g. "pacs:n=1"; alpha is taken from the sweep
        #[arg(long)]
        state: String,
        /// Sweep as a:b:step, b included
        #[arg(long, allow_hyphen_values = true)]
        alpha_range: String,
        /// Cost spec: "cubic", "cubic:z=1.0", "quintic", "quintic:s=1.0,r4=0.2"
        #[arg(long, default_value = "cubic")]
        cost: String,
        #[command(flatten)]
        common: Common,
    },
    /// Cubic ξ and the Wigner minimum against transmittance
    LossSweep {
        /// State spec, e.g. "pacs:alpha=1.43,n=1"
        #[arg(long)]
        state: String,
        /// Transmittances as a:b:step within (0, 1]
        #[arg(long, allow_hyphen_values = true)]
        eta_range: String,
        #[command(flatten)]
        common: Common,
    },
    /// Certify a state given as a spec, a state JSON file or a quadrature CSV
    Certify {
        /// State JSON ({"n_levels","re","im"}) or quadrature CSV (theta,value)
        #[arg(long, conflicts_with = "state", required_unless_present = "state")]
        input: Option<PathBuf>,
        /// State spec, e.g. "fock:1"
        #[arg(long)]
        state: Option<String>,
        /// Bootstrap resamples for quadrature input
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Detector efficiency assumed in the reconstruction
        #[arg(long, default_value_t = 1.0)]
        efficiency: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic homodyne records as CSV (theta,value)
    Sample {
        #[arg(long)]
        state: String,
        /// Number of phases kπ/count
        #[arg(long, default_value_t = 12)]
        phases: usize,
        /// Records per phase
        #[arg(long, default_value_t = 10_000)]
        per_phase: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum-likelihood reconstruction; writes a state JSON and prints a summary
    Tomography {
        /// Quadrature CSV (theta,value)
        #[arg(long)]
        input: PathBuf,
        /// Detector efficiency to correct for
        #[arg(long, default_value_t = 1.0)]
        efficiency: f64,
        /// Reference state spec for the fidelity
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Wigner function on a grid (CSV when --out ends in .csv, JSON otherwise)
    Wigner {
        #[arg(long)]
        state: String,
        /// x axis as min:max:points
        #[arg(long, allow_hyphen_values = true)]
        x_axis: Option<String>,
        /// p axis as min:max:points
        #[arg(long, allow_hyphen_values = true)]
        p_axis: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Curve {
            state,
            alpha_range,
            cost,
            common,
        } => commands::curve(&state, &alpha_range, &cost, &common),
        Command::LossSweep {
            state,
            eta_range,
            common,
        } => commands::loss_sweep(&state, &eta_range, &common),
        Command::Certify {
            input,
            state,
            bootstrap,
            efficiency,
            common,
        } => commands::certify(
            input.as_deref(),
            state.as_deref(),
            bootstrap,
            efficiency,
            &common,
        ),
        Command::Sample {
            state,
            phases,
            per_phase,
            common,
        } => commands::sample(&state, phases, per_phase, &common),
        Command::Tomography {
            input,
            efficiency,
            reference,
            max_iters,
            common,
        } => commands::tomography(&input, efficiency, reference.as_deref(), max_iters, &common),
        Command::Wigner {
            state,
            x_axis,
            p_axis,
            common,
        } => commands::wigner(&state, x_axis.as_deref(), p_axis.as_deref(), &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlsq: {e}");
            e.exit_code()
        }
    }
}
