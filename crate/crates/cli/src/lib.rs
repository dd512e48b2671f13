//! Library side of the `stirlab` binary: configuration, dispatch and manifests.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, parse_file, Command, ConfigError, Defaults, THREADS_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stirlab", version, about = "Contact process with rapid stirring: series, lineages and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Neighbour-occupation series and the constant theta_d
    Theta(Flags),
    /// Green's function at the origin
    Green(Flags),
    /// Exact check of the one-step return identity
    Identity(Flags),
    /// Occupation functionals of the coupled V and W chains
    Coupling(Flags),
    /// `E[Z1]` by Monte Carlo against its closed forms
    Z1(Flags),
    /// `P(F1)` by Monte Carlo against its closed form
    F1(Flags),
    /// Survival-proxy probability with a Wilson interval
    Survive(Flags),
    /// Mean mass and neighbour pairs at checkpoints
    Masscurve(Flags),
    /// Bisection for the critical birth rate
    Critscan(Flags),
    /// One critical scan per N against the reference constants
    Report(Flags),
}

/// Flags shared by every subcommand. Values are parsed with the config file
/// entries so both report type errors the same way.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long = "N", alias = "n")]
    pub n: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long = "mass-cap")]
    pub mass_cap: Option<String>,
    /// Comma-separated observation times
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// raw or speeded_up
    #[arg(long = "time-scale")]
    pub time_scale: Option<String>,
    #[arg(long = "event-budget")]
    pub event_budget: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub nmax: Option<String>,
    #[arg(long)]
    pub t: Option<String>,
    /// consistent or doubled
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long = "max-reps")]
    pub max_reps: Option<String>,
    /// Bisection tolerance in lambda, or auto
    #[arg(long = "tol-lambda")]
    pub tol_lambda: Option<String>,
    /// Comma-separated N values for report
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
}

impl Flags {
    pub fn pairs(&self) -> Vec<(String, String)> {
        let fields = [
            ("d", &self.d),
            ("N", &self.n),
            ("lambda", &self.lambda),
            ("theta", &self.theta),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("horizon", &self.horizon),
            ("mass_cap", &self.mass_cap),
            ("checkpoints", &self.checkpoints),
            ("time_scale", &self.time_scale),
            ("event_budget", &self.event_budget),
            ("tol", &self.tol),
            ("nmax", &self.nmax),
            ("t", &self.t),
            ("variant", &self.variant),
            ("threshold", &self.threshold),
            ("max_reps", &self.max_reps),
            ("tol_lambda", &self.tol_lambda),
            ("n_list", &self.n_list),
            ("out", &self.out),
            ("threads", &self.threads),
        ];
        fields.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

impl Sub {
    pub fn split(self) -> (Command, Flags) {
        match self {
            Sub::Theta(f) => (Command::Theta, f),
            Sub::Green(f) => (Command::Green, f),
            Sub::Identity(f) => (Command::Identity, f),
            Sub::Coupling(f) => (Command::Coupling, f),
            Sub::Z1(f) => (Command::Z1, f),
            Sub::F1(f) => (Command::F1, f),
            Sub::Survive(f) => (Command::Survive, f),
            Sub::Masscurve(f) => (Command::Masscurve, f),
            Sub::Critscan(f) => (Command::Critscan, f),
            Sub::Report(f) => (Command::Report, f),
        }
    }
}

fn exit_code(err: &stirlab_core::Error) -> i32 {
    use stirlab_core::Error as E;
    match err {
        E::InvalidDimension(_)
        | E::DimensionMismatch { .. }
        | E::OutOfRange { .. }
        | E::DivergentSeries(_)
        | E::Budget { .. }
        | E::InvalidParameter(_) => EXIT_CONFIG,
        E::Truncation { .. } | E::Quadrature { .. } => EXIT_INCONCLUSIVE,
        _ => EXIT_FAILURE,
    }
}

fn config_error(e: ConfigError) -> i32 {
    eprintln!("stirlab: {e}");
    EXIT_CONFIG
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = cli.command.split();
    let file = match &flags.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match parse_file(&text) {
                Ok(f) => f,
                Err(e) => return config_error(e),
            },
            Err(e) => {
                eprintln!("stirlab: cannot read {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        },
        None => Vec::new(),
    };
    let env_threads = std::env::var(THREADS_ENV).ok();
    let cfg = match parse_config(Some(command), &file, &flags.pairs(), env_threads.as_deref(), Defaults::from_environment()) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    println!("stirlab {} seed={} threads={}", cfg.command, cfg.seed, cfg.threads);

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("stirlab: cannot start {} worker threads: {e}", cfg.threads);
            return EXIT_FAILURE;
        }
    };
    let start = Instant::now();
    let output = match pool.install(|| commands::run(&cfg)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("stirlab: {e}");
            return exit_code(&e);
        }
    };
    let wall = start.elapsed().as_secs_f64();
    if let Err(e) = manifest::write_outputs(&cfg.out, &cfg, &output.files, wall) {
        eprintln!("stirlab: writing to {}: {e}", cfg.out.display());
        return EXIT_FAILURE;
    }
    println!("{}", output.summary);
    if output.inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}
