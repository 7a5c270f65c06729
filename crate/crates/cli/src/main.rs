use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use immersoflow::cases::{self, CaseConfig, GeometrySpec, SweepParameter};
use immersoflow::Error;

/// Immersed isogeometric flow solver.
#[derive(Debug, Parser)]
#[command(name = "immersoflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Case configuration (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Override a configuration entry, e.g. `--set degree=2` or
    /// `--set stabilization.gamma=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory [default: out/<case name>].
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "IMMERSOFLOW_THREADS")]
    threads: Option<usize>,
    /// Seed for randomized self-checks. The solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve every mesh of the configured study.
    Run(Common),
    /// Convergence study over uniform refinements of the first mesh.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of meshes, each twice as fine as the previous one.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Repeat the study for several values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// gamma, gamma_tilde, rho_max or k.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Inf-sup constants on the study meshes.
    Infsup(Common),
    /// Area of the cut-cell quadrature against the exact area, per bisection depth.
    Quadcheck(Common),
    /// Solve the finest study mesh and write velocity and pressure fields.
    Export {
        #[command(flatten)]
        common: Common,
        /// Lattice intervals per cell and direction.
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Run(c) | Command::Infsup(c) | Command::Quadcheck(c) => c,
            Command::Converge { common, .. } | Command::Sweep { common, .. } | Command::Export { common, .. } => common,
        }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn refined_meshes(cfg: &CaseConfig, levels: usize) -> Vec<usize> {
    let first = cfg.study.meshes[0];
    match cfg.geometry {
        GeometrySpec::Turek(_) => (0..levels).map(|l| first + l).collect(),
        _ => (0..levels).map(|l| first << l).collect(),
    }
}

fn execute(command: &Command, cfg: CaseConfig, out: &Path) -> Result<(), Failure> {
    match command {
        Command::Run(_) => {
            let (summary, _) = cases::run_case(&cfg, Some(out))?;
            print_json(&summary.rates)?;
        }
        Command::Converge { levels, .. } => {
            if *levels < 2 {
                return Err(Failure::Usage("--levels must be at least 2".into()));
            }
            let mut cfg = cfg;
            cfg.study.meshes = refined_meshes(&cfg, *levels);
            let (summary, _) = cases::run_case(&cfg, Some(out))?;
            print_json(&summary.rates)?;
        }
        Command::Sweep { param, values, .. } => {
            let p: SweepParameter = param.parse()?;
            let s = cases::run_sweep(&cfg, p, values, Some(out))?;
            log::info!("sweep over {} values written", s.values.len());
        }
        Command::Infsup(_) => {
            let rows = cases::run_infsup(&cfg, Some(out))?;
            for r in rows {
                println!("{} {:.6e} {}", r.mesh, r.result.lambda_h, r.result.kernel_modes);
            }
        }
        Command::Quadcheck(_) => {
            let q = cases::run_quadcheck(&cfg, Some(out))?;
            print_json(&q)?;
        }
        Command::Export { samples, .. } => {
            let mut cfg = cfg;
            cfg.study.meshes = vec![*cfg.study.meshes.last().expect("validated non-empty")];
            cfg.export.samples_per_cell = (*samples).max(1);
            let (summary, _) = cases::run_case(&cfg, Some(out))?;
            print_json(&summary.export)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    log::debug!("seed {}", common.seed);
    let cfg = CaseConfig::load(&common.config)?.with_overrides(&common.overrides)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    execute(&cli.command, cfg, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let level = match cli.command.common().verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
