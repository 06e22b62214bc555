use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug, Clone)]
#[command(name = "wavekahler", version, about = "Numerical certification of almost-Kähler wave structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Flags shared by every subcommand. All optional so a config file can fill them.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Number of sample points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Seed of the ChaCha8 point sampler.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Absolute tolerance (defaults depend on the check).
    #[arg(long = "tol", alias = "atol", global = true)]
    pub atol: Option<f64>,
    /// Relative tolerance for normalized quantities.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Include per-point residuals in passing reports too.
    #[arg(long, global = true)]
    pub per_point: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Identity suites on sampled points.
    Check {
        #[command(subcommand)]
        what: CheckCommand,
    },
    /// Solvers with their built-in checks.
    Solve {
        #[command(subcommand)]
        what: SolveCommand,
    },
    /// Print the JSON schema of the reports.
    Report,
    /// List the structure and base presets.
    Presets,
}

#[derive(Subcommand, Debug, Clone)]
pub enum CheckCommand {
    /// Curvature and almost-Kähler identities on a structure preset.
    Identities(IdentityArgs),
    /// Construction invariants, Darboux identity and scalar equality of a wave.
    Wave(WaveArgs),
    /// Killing residuals of the extended J grad H on the total space.
    Extremal(WaveArgs),
}

#[derive(Subcommand, Debug, Clone)]
pub enum SolveCommand {
    /// Conformal factor on the round sphere for an axisymmetric H.
    Sphere(SphereArgs),
    /// Boundary-value profile on the Hirzebruch interval.
    Hirzebruch(HirzebruchArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct IdentityArgs {
    #[arg(long)]
    pub structure: Option<String>,
    /// Wave profile H.
    #[arg(long = "H")]
    pub h: Option<String>,
    /// Conformal exponent u(x, y) of an isothermal surface.
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct WaveArgs {
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long = "H")]
    pub h: Option<String>,
    #[arg(long)]
    pub u: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SphereArgs {
    /// H as an expression in `zeta` (or `z`).
    #[arg(long = "H")]
    pub h: Option<String>,
    /// CSV of `zeta,H` rows instead of an expression.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct HirzebruchArgs {
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
}
