use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emclosure::ScenarioKind;

mod commands;
mod config;

use commands::{AssertionFailed, CarlemanArgs, ConfigError, Demo, Setup};
use config::Config;

/// Full and reduced lattice integrators for a charged scalar coupled to a
/// gauge field, with a Fock-space embedding of the polynomial form.
#[derive(Parser)]
#[command(name = "emclosure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the coupled field and matter system.
    RunFull(RunArgs),
    /// Integrate the field-only closed system.
    RunReduced(RunArgs),
    /// Run both integrators on one scenario and report the difference in B.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Exit with status 1 when the max relative L∞ error exceeds this.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Evolve a named polynomial system in a truncated Fock space.
    Carleman(CarlemanCli),
    /// Run compare at several grid sizes and estimate convergence orders.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Grid sizes (powers of two).
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
        levels: Vec<usize>,
    },
    /// Run a quick invariant suite and print PASS/FAIL per check.
    Check {
        /// Scratch directory for the suite's outputs.
        #[arg(long, default_value = "check-out")]
        out: PathBuf,
    },
}

/// Options shared by the simulation commands. Flags override the file.
///
/// Defaults: grid.n = 256, grid.length = 2π, time.t_end = 1, time.dt = h/2,
/// params.e = 1, params.m = 1, params.b0_floor = 1e-6,
/// params.phi_floor = 1e-3, scenario.name = matter-packet,
/// output.every = 10, output.dir = out.
#[derive(Args, Clone)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario: matter-packet, pure-gauge-wave or vacuum-offset.
    #[arg(long)]
    scenario: Option<String>,
    /// Grid points (power of two, at least 16).
    #[arg(long)]
    n: Option<usize>,
    /// Periodic box length.
    #[arg(long)]
    length: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Keep every k-th step.
    #[arg(long)]
    every: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Charge.
    #[arg(long)]
    e: Option<f64>,
    /// Mass.
    #[arg(long)]
    m: Option<f64>,
    /// Clamp guard breaches instead of aborting.
    #[arg(long)]
    soft_guards: bool,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<Config> {
        let mut c = match &self.config {
            Some(path) => Config::load(path).map_err(|e| ConfigError(format!("{e:#}")))?,
            None => Config::default(),
        };
        if let Some(name) = &self.scenario {
            c.scenario.name = name.parse::<ScenarioKind>().map_err(|e| ConfigError(format!("scenario.name: {e}")))?;
        }
        macro_rules! set {
            ($flag:ident => $($slot:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    $($slot)+ = v;
                }
            };
        }
        set!(n => c.grid.n);
        set!(length => c.grid.length);
        set!(t_end => c.time.t_end);
        set!(every => c.output.every);
        set!(out => c.output.dir);
        set!(e => c.params.e);
        set!(m => c.params.m);
        if self.dt.is_some() {
            c.time.dt = self.dt;
        }
        if self.soft_guards {
            c.params.soft_guards = true;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct CarlemanCli {
    #[arg(value_enum)]
    system: Demo,
    /// Initial values, comma separated (one per variable).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi0: Vec<f64>,
    /// Total occupation cutoff of the Fock basis.
    #[arg(long, default_value_t = 12)]
    cutoff: u32,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Use RK4 with this step instead of the Taylor propagator.
    #[arg(long)]
    dt: Option<f64>,
    /// Grid points for reduced-tiny (1 to 4).
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Background charge for reduced-tiny.
    #[arg(long, default_value_t = 0.5)]
    background_charge: f64,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::RunFull(a) => commands::run_full_cmd(&Setup::new(a.resolve()?)?),
        Command::RunReduced(a) => commands::run_reduced_cmd(&Setup::new(a.resolve()?)?),
        Command::Compare { run, tolerance } => commands::compare_cmd(&Setup::new(run.resolve()?)?, tolerance),
        Command::Carleman(c) => commands::carleman_cmd(&CarlemanArgs {
            demo: c.system,
            xi0: c.xi0,
            cutoff: c.cutoff,
            t_end: c.t_end,
            dt: c.dt,
            n: c.n,
            background_charge: c.background_charge,
        }),
        Command::Convergence { run, levels } => {
            let config = run.resolve()?;
            config.validate().map_err(|e| ConfigError(format!("{e:#}")))?;
            commands::convergence_cmd(&config, &levels)
        }
        Command::Check { out } => commands::check_cmd(&out),
    }
}

/// 2 for configuration problems, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<AssertionFailed>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<emclosure::Error>() {
            use emclosure::Error::*;
            return match e.root() {
                InvalidParameter(_) | UnsupportedGrid(_) | CutoffTooSmall(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
