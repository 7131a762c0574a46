use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use obstab::commands::{self, FEEDON_WINDOW, SWEEP_KS};
use obstab::config::{parse_config, ConfigOverrides};
use obstab::experiments::Preset;
use obstab::BoundaryCondition;

/// Feedback stabilization of penalized parabolic obstacle problems.
///
/// Set OBSTAB_THREADS to bound the worker pool used by sweeps.
#[derive(Debug, Parser)]
#[command(name = "obstab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One coupled run per configured penalty parameter.
    Run(Common),
    /// Penalty sweep with violation statistics.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Penalty parameters, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_KS)]
        ks: Vec<f64>,
    },
    /// Few-actuator and small-gain runs over a unit horizon.
    Necessity(Common),
    /// Decay-rate fits for (2,2), (4,3) and (10,6).
    Decay(Common),
    /// Feedback switched on only inside the given windows.
    Feedon {
        #[command(flatten)]
        common: Common,
        /// Window `start,end`; repeat for several. Defaults to 1,4.
        #[arg(long = "window", value_parser = parse_window)]
        windows: Vec<(f64, f64)>,
        /// No feedback at all.
        #[arg(long, conflicts_with = "windows")]
        off: bool,
    },
    /// Violation sets of y and w over time.
    Contact(Common),
    /// Subspace constants and operator-bound checks.
    Diagnostics {
        #[command(flatten)]
        common: Common,
        /// Actuator counts, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = 1..=10)]
        ms: Vec<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `default`, `nonsmooth`, or a stem such as lam5M6Feed14T4.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long, value_parser = parse_bc)]
    bc: Option<BoundaryCondition>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    nu: Option<f64>,
    /// Penalty parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    k_my: Option<Vec<f64>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    support_ratio: Option<f64>,
    /// Feedback window `start,end`; repeat for several.
    #[arg(long, value_parser = parse_window)]
    feed_on: Option<Vec<(f64, f64)>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    contact_every: Option<usize>,
    #[arg(long)]
    contact_eps: Option<f64>,
}

impl Common {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            scenario: self.scenario.clone(),
            n_nodes: self.n_nodes,
            bc: self.bc,
            preset: self.preset,
            nu: self.nu,
            k_my: self.k_my.clone(),
            m: self.m,
            lambda: self.lambda,
            support_ratio: self.support_ratio,
            feed_on: self.feed_on.clone(),
            dt: self.dt,
            t_final: self.t_final,
            record_every: self.record_every,
            contact_every: self.contact_every,
            out: self.out.clone(),
            contact_eps: self.contact_eps,
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `start,end`, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_bc(s: &str) -> Result<BoundaryCondition, String> {
    match s {
        "neumann" | "neumann_homogeneous" => Ok(BoundaryCondition::NeumannHomogeneous),
        "dirichlet" | "dirichlet_homogeneous" => Ok(BoundaryCondition::DirichletHomogeneous),
        _ => Err(format!("unknown boundary condition `{s}`")),
    }
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "smooth" => Ok(Preset::Smooth),
        "nonsmooth" => Ok(Preset::Nonsmooth),
        _ => Err(format!("unknown preset `{s}`")),
    }
}

fn load(c: &Common) -> obstab::Result<obstab::config::RunConfig> {
    parse_config(c.config.as_deref(), &c.overrides())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(n) = std::env::var("OBSTAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("cannot set thread count: {e}");
        }
    }

    let cli = Cli::parse();
    let result = (|| {
        match &cli.command {
            Command::Run(c) => commands::cmd_run(&load(c)?),
            Command::Sweep { common, ks } => {
                let mut o = common.overrides();
                o.k_my = Some(ks.clone());
                commands::cmd_sweep(&parse_config(common.config.as_deref(), &o)?)
            }
            Command::Necessity(c) => commands::cmd_necessity(&load(c)?),
            Command::Decay(c) => commands::cmd_decay(&load(c)?),
            Command::Feedon {
                common,
                windows,
                off,
            } => {
                let windows = match (off, windows.is_empty()) {
                    (true, _) => Vec::new(),
                    (false, true) => vec![FEEDON_WINDOW],
                    (false, false) => windows.clone(),
                };
                commands::cmd_feedon(&load(common)?, &windows)
            }
            Command::Contact(c) => commands::cmd_contact(&load(c)?),
            Command::Diagnostics { common, ms } => {
                commands::cmd_diagnostics(&load(common)?, ms)
            }
        }
    })();

    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
