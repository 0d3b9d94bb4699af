use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reachkit_cli::{run_pipeline, run_tables, Command, JobConfig, LevelChoice, TargetSpec, EXIT_ERROR};

#[derive(Parser, Debug)]
#[command(name = "reachkit", version, about = "Symmetry-based reachability analysis for Rydberg-ring VQE")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Write the resource and target Hamiltonians.
    Build(JobArgs),
    /// Lie closure, reductive decomposition and simulability of the resource set.
    Lie(JobArgs),
    /// Invariant-subspace decomposition of the resource set.
    Decompose(JobArgs),
    /// Reachability verdict for the target ground space.
    Reach(JobArgs),
    /// Variational optimization of the target energy.
    Vqe(JobArgs),
    /// Spectral sweep from the parent Hamiltonian to the target.
    Adiabatic(JobArgs),
    /// Decomposition, verdict and optional VQE corroboration.
    Pipeline(JobArgs),
    /// Support tables for a range of register sizes.
    Tables(TableArgs),
    /// Run a job described by a JSON configuration file.
    Run {
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct JobArgs {
    #[arg(long = "n", default_value_t = 4)]
    n_sites: usize,
    /// ising, heisenberg, example1..3 or custom:<operator json>.
    #[arg(long, default_value = "heisenberg")]
    target: TargetSpec,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    omega: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    j: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    h: f64,
    #[arg(long, value_enum, default_value = "irreducible")]
    level: LevelArg,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    iterations: usize,
    /// Defaults to twice the number of sites.
    #[arg(long)]
    layers: Option<usize>,
    /// Overridden by REACHKIT_SEED.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "reachkit-out")]
    out: PathBuf,
    /// Enable commutant analysis beyond seven sites.
    #[arg(long)]
    sparse: bool,
    /// Uniform grid points of the adiabatic sweep.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Run VQE after the verdict (pipeline only).
    #[arg(long)]
    vqe: bool,
    /// Write projector matrices next to decomposition.json.
    #[arg(long)]
    dump_projectors: bool,
    /// Lie closure dimension guard.
    #[arg(long)]
    max_dim: Option<usize>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value_t = 3)]
    from: usize,
    #[arg(long, default_value_t = 7)]
    to: usize,
    #[command(flatten)]
    job: JobArgs,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum LevelArg {
    Isotypic,
    Irreducible,
}

impl JobArgs {
    fn into_config(self, command: Command) -> JobConfig {
        JobConfig {
            command,
            n_sites: self.n_sites,
            target: self.target,
            omega: self.omega,
            delta: self.delta,
            j: self.j,
            h: self.h,
            level: match self.level {
                LevelArg::Isotypic => LevelChoice::Isotypic,
                LevelArg::Irreducible => LevelChoice::Irreducible,
            },
            seed: self.seed,
            out: self.out,
            restarts: self.restarts,
            iterations: self.iterations,
            layers: self.layers,
            threads: self.threads,
            sparse: self.sparse,
            grid: self.grid,
            vqe: self.vqe,
            dump_projectors: self.dump_projectors,
            max_dim: self.max_dim,
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), String> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| format!("cannot configure {t} threads: {e}"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, String> {
    let (mut config, range) = match cli.command {
        Sub::Build(a) => (a.into_config(Command::Build), None),
        Sub::Lie(a) => (a.into_config(Command::Lie), None),
        Sub::Decompose(a) => (a.into_config(Command::Decompose), None),
        Sub::Reach(a) => (a.into_config(Command::Reach), None),
        Sub::Vqe(a) => (a.into_config(Command::Vqe), None),
        Sub::Adiabatic(a) => (a.into_config(Command::Adiabatic), None),
        Sub::Pipeline(a) => (a.into_config(Command::Pipeline), None),
        Sub::Tables(t) => (t.job.into_config(Command::Pipeline), Some(t.from..=t.to)),
        Sub::Run { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg: JobConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", config.display()))?;
            (cfg, None)
        }
    };
    if let Ok(s) = std::env::var("REACHKIT_SEED") {
        config.seed = s.parse().map_err(|e| format!("REACHKIT_SEED={s:?}: {e}"))?;
    }
    set_threads(config.threads)?;
    let outcome = match range {
        Some(r) => run_tables(&config, r).map(|(_, o)| o),
        None => run_pipeline(&config),
    }
    .map_err(|e| e.to_string())?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("reachkit: {msg}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
