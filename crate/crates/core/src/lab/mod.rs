//! The `nuhyp` command-line lab: configuration, experiment orchestration
//! and artifacts.
//!
//! Exit codes: `0` success, `1` a scientific or invariant check failed,
//! `2` usage or configuration error.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::LabConfig;
pub use output::RunManifest;

/// Outcome of a command that did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, unreadable or malformed configuration, IO errors.
    Usage(String),
    /// A check or computation failed.
    Science(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Science(_) => 1,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Science(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "nuhyp", version, about = "Numerical lab for near-identity nonuniformly hyperbolic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs the invariant suite on the configured construction.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Lyapunov spectra of S, R, Q, P or the assembled map f.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        n_iters: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value = "lyapunov.csv")]
        out: PathBuf,
    },
    /// Expansion integral of the twisted map over a grid of twist strengths.
    Prop51 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Comma-separated twist strengths.
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long, default_value = "prop51.csv")]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Drift of the interval coordinate along the accessibility loop.
    Drift {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: Option<String>,
        #[arg(long, value_delimiter = ',')]
        z0: Option<Vec<f64>>,
        #[arg(long, default_value = "drift.csv")]
        out: PathBuf,
    },
    /// Birkhoff averages of the assembled map from several starts per band.
    Birkhoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        bands: Option<Vec<usize>>,
        #[arg(long)]
        observable: Option<String>,
        #[arg(long)]
        n_starts: Option<usize>,
        #[arg(long)]
        n_iters: Option<usize>,
        #[arg(long, default_value = "birkhoff.csv")]
        out: PathBuf,
    },
    /// Holonomy displacement along the second orbit for a grid of
    /// approximating orbits.
    Holonomy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long, default_value = "holonomy.csv")]
        out: PathBuf,
    },
    /// Per-band C^1 distances of the assembled map.
    AssembleReport {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "assembly.csv")]
        out: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Lyapunov { .. } => "lyapunov",
            Command::Prop51 { .. } => "prop51",
            Command::Drift { .. } => "drift",
            Command::Birkhoff { .. } => "birkhoff",
            Command::Holonomy { .. } => "holonomy",
            Command::AssembleReport { .. } => "assemble-report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate { common }
            | Command::Lyapunov { common, .. }
            | Command::Prop51 { common, .. }
            | Command::Drift { common, .. }
            | Command::Birkhoff { common, .. }
            | Command::Holonomy { common, .. }
            | Command::AssembleReport { common, .. } => common,
        }
    }
}

fn load_config(common: &Common) -> Result<LabConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => LabConfig::load(p).map_err(Failure::Usage)?,
        None => LabConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("LAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("LAB_THREADS = `{v}` is not a thread count")))?;
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Science(m) => eprintln!("failed: {m}"),
            }
            f.code()
        }
    }
}

fn execute(cmd: &Command) -> Result<(), Failure> {
    configure_threads()?;
    let mut c = load_config(cmd.common())?;
    let started = output::now();
    let result = match cmd {
        Command::Validate { .. } => return commands::validate(&c),
        Command::Lyapunov { map, n_iters, runs, out, .. } => {
            set(&mut c.lyapunov.map, map);
            set(&mut c.lyapunov.n_iters, n_iters);
            set(&mut c.lyapunov.runs, runs);
            commands::lyapunov(&c, out)
        }
        Command::Prop51 { n_samples, alpha, out, svg, .. } => {
            set(&mut c.prop51.n_samples, n_samples);
            set(&mut c.prop51.alpha_grid, alpha);
            commands::prop51(&c, out, svg.as_deref())
        }
        Command::Drift { map, z0, out, .. } => {
            set(&mut c.drift.map, map);
            set(&mut c.drift.z0_grid, z0);
            commands::drift(&c, out)
        }
        Command::Birkhoff { bands, observable, n_starts, n_iters, out, .. } => {
            set(&mut c.birkhoff.bands, bands);
            set(&mut c.birkhoff.observable, observable);
            set(&mut c.birkhoff.n_starts, n_starts);
            set(&mut c.birkhoff.n_iters, n_iters);
            commands::birkhoff(&c, out)
        }
        Command::Holonomy { k, out, .. } => {
            set(&mut c.holonomy.k_grid, k);
            commands::holonomy(&c, out)
        }
        Command::AssembleReport { out, .. } => commands::assemble_report(&c, out),
    };
    finish(cmd, &c, started, result)
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

/// Writes the manifest for whatever outputs exist, then reports the result.
fn finish(
    cmd: &Command,
    cfg: &LabConfig,
    started: String,
    result: commands::Outcome,
) -> Result<(), Failure> {
    let (outputs, failure) = match result {
        Ok(o) => (o, None),
        Err((o, f)) => (o, Some(f)),
    };
    let manifest = RunManifest {
        command: cmd.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        git_describe: output::git_describe(),
        started_at: started,
        finished_at: output::now(),
        outputs,
    };
    manifest.write()?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
