//! `gapsol`: coupled-mode models, spectral gaps, gap solitons, and envelope
//! validation for the periodic Gross-Pitaevskii equation.

mod commands;

use clap::{Parser, Subcommand};
use gapsol_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gapsol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch band structure along a k-path, emitted as CSV
    Bands {
        #[arg(long)]
        config: PathBuf,
        /// Path corners as `k1 .. kd; k1 .. kd; ...`
        #[arg(long)]
        path: String,
        #[arg(long, default_value_t = 32)]
        samples_per_segment: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the coupled-mode model (κ from W, γ from σ) into a model file
    Coeffs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dispersion surface Ω_j(K) over a K-grid, emitted as CSV
    Dispersion {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan for spectral gaps
    Gap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan the moving-frame dispersion Ω(K) - v·K for gaps
    MovingGap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Frame velocity components
        #[arg(long)]
        velocity: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Band-edge data (frequency, eigenvector, gradient, Hessian)
    Edge {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        band: Option<usize>,
        /// Edge location, components separated by spaces
        #[arg(long)]
        k0: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the asymptotic soliton seed near a band edge
    NlsSeed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        edge: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output seed field (binary)
        #[arg(long)]
        out: PathBuf,
        /// Optional radial-profile CSV
        #[arg(long)]
        profile_csv: Option<PathBuf>,
    },
    /// Petviashvili solve at a frequency in the gap
    Soliton {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        seed_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Continue a soliton in Ω across the gap
    Continue {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        start_field: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evolve the envelope system
    EvolveCme {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the Gross-Pitaevskii field
    EvolveGp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Approximation-error scaling study across a list of ε
    ValidateScaling {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured ε list, comma separated
        #[arg(long)]
        epsilons: Option<String>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full run: model, gap, edge, seed, soliton, continuation
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Skip model assembly by supplying a model file
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Skip the edge stage by supplying an edge file
        #[arg(long)]
        edge_file: Option<PathBuf>,
        /// Skip the seed stage by supplying a seed field
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) => 2,
        Error::Numerical(_) => 3,
        Error::Resolution(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bands { config, path, samples_per_segment, out } => {
            commands::bands(&config, &path, samples_per_segment, &out)
        }
        Command::Coeffs { config, out } => commands::coeffs(&config, &out),
        Command::Dispersion { model, radius, step, out } => {
            commands::dispersion_surface(&model, radius, step, &out)
        }
        Command::Gap { model, config, out } => commands::gap(&model, config.as_deref(), &out),
        Command::MovingGap { model, config, velocity, out } => {
            commands::moving_gap(&model, config.as_deref(), &velocity, &out)
        }
        Command::Edge { model, config, band, k0, out } => {
            commands::edge(&model, config.as_deref(), band, k0.as_deref(), &out)
        }
        Command::NlsSeed { model, edge, config, out, profile_csv } => {
            commands::nls_seed(&model, &edge, &config, &out, profile_csv.as_deref())
        }
        Command::Soliton { model, omega, seed_file, out, sidecar } => {
            commands::soliton(&model, omega, &seed_file, &out, sidecar.as_deref())
        }
        Command::Continue { model, start_field, from, to, step, out_dir } => {
            commands::continue_branch(&model, &start_field, from, to, step, &out_dir)
        }
        Command::EvolveCme { model, field, dt, t_end, out } => {
            commands::evolve_cme(&model, &field, dt, t_end, &out)
        }
        Command::EvolveGp { config, field, dt, t_end, out } => {
            commands::evolve_gp(&config, &field, dt, t_end, &out)
        }
        Command::ValidateScaling { config, epsilons, t0, out } => {
            commands::validate_scaling(&config, epsilons.as_deref(), t0, &out)
        }
        Command::Pipeline { config, out_dir, model_file, edge_file, seed_file } => {
            commands::pipeline(
                &config,
                &out_dir,
                model_file.as_deref(),
                edge_file.as_deref(),
                seed_file.as_deref(),
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
