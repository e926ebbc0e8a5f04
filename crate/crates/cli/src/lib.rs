//! The `clockdil` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "clockdil", version, about = "Unitary dilations and bang-bang decoupling of open quantum dynamics")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides the config file).
    #[arg(long, global = true, env = config::OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    /// Seed for random models and probe states.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the propagator grid U(t,0) for a model and check the dilation identity.
    Dilate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Sweep the decoupling error over n and fit its rate.
    Decouple {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Fit the log-log rate of an existing sweep CSV.
    RateFit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Point-localized state demonstrations over eps = 2^-n.
    Pointstate {
        /// delta, mixed, oscillation or compact.
        #[arg(long)]
        demo: Option<String>,
        #[arg(long)]
        eps_levels: Option<u32>,
    },
    /// CPTP and Choi diagnostics for a model.
    ChannelInfo {
        #[command(flatten)]
        model: ModelArgs,
        /// Times at which to report (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0])]
        t: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// amplitude-damping, identity, hamiltonian, hamiltonian-z or random.
    #[arg(long)]
    pub model: Option<String>,
    /// TOML file with a Lindbladian (`dim`, `hamiltonian`, `jumps`).
    #[arg(long)]
    pub lindbladian: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub t: Option<f64>,
    /// Explicit n values (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["n_min", "n_max"])]
    pub n_list: Option<Vec<usize>>,
    /// Doubling sweep n_min, 2 n_min, ... up to n_max.
    #[arg(long, requires = "n_max")]
    pub n_min: Option<usize>,
    #[arg(long, requires = "n_min")]
    pub n_max: Option<usize>,
    /// pauli or weyl.
    #[arg(long)]
    pub set: Option<String>,
    /// One cycle through the set, as indices (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[arg(long)]
    pub cells_per_interval: Option<usize>,
    #[arg(long)]
    pub haar_probes: Option<usize>,
    /// pipeline or analytic.
    #[arg(long)]
    pub source: Option<String>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = &self.model {
            cfg.model.preset = m.clone();
            cfg.model.file = None;
        }
        if let Some(f) = &self.lindbladian {
            cfg.model.file = Some(f.clone());
        }
        if let Some(d) = self.dim {
            cfg.model.dim = d;
        }
    }
}

impl SweepArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.sweep;
        if let Some(t) = self.t {
            s.t = t;
        }
        if let Some(n) = &self.n_list {
            s.n_list = n.clone();
        }
        if let (Some(lo), Some(hi)) = (self.n_min, self.n_max) {
            s.n_list = clockdil::decoupling::doubling(lo, hi);
        }
        if let Some(v) = &self.set {
            s.set = v.clone();
        }
        if let Some(o) = &self.order {
            s.order = Some(o.clone());
        }
        if let Some(c) = self.cells_per_interval {
            s.cells_per_interval = c;
        }
        if let Some(h) = self.haar_probes {
            s.haar_probes = h;
        }
        if let Some(src) = &self.source {
            s.source = src.clone();
        }
    }
}

/// Loads the config, applies flags and runs the subcommand.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Dilate { model, t_max, cells } => {
            model.apply(&mut cfg);
            if let Some(t) = t_max {
                cfg.grid.t_max = *t;
            }
            if let Some(n) = cells {
                cfg.grid.cells = *n;
            }
            cfg.validate()?;
            commands::cmd_dilate(&cfg)
        }
        Command::Decouple { model, sweep } => {
            model.apply(&mut cfg);
            sweep.apply(&mut cfg);
            cfg.validate()?;
            commands::cmd_decouple(&cfg)
        }
        Command::RateFit { input } => {
            cfg.validate()?;
            commands::cmd_rate_fit(&cfg, input)
        }
        Command::Pointstate { demo, eps_levels } => {
            if let Some(d) = demo {
                cfg.pointstate.demo = d.clone();
            }
            if let Some(n) = eps_levels {
                cfg.pointstate.eps_levels = *n;
            }
            cfg.validate()?;
            commands::cmd_pointstate(&cfg)
        }
        Command::ChannelInfo { model, t } => {
            model.apply(&mut cfg);
            cfg.validate()?;
            commands::cmd_channel_info(&cfg, t)
        }
    }
}
