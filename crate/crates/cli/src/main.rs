//! `wta`: simulate winner-take-all charge-flow graphs, take their spectra,
//! and score them against oracles.
//!
//! Exit codes: 0 success, 1 a tolerance gate failed, 2 usage or input
//! error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wta_core::analysis::EpsSchedule;
use wta_core::experiment::{execute, output_dir, replay, Command, OracleRequest, OracleTarget, RunOutcome, RunSpec};
use wta_core::gates::Gates;
use wta_core::oracle::DEFAULT_CUTOFF;
use wta_core::{Engine, Error, LeakSemantics, SimulationConfig, Solver, SpectralKind};

#[derive(Parser)]
#[command(
    name = "wta",
    version,
    about = "Winner-take-all charge-flow graphs and their spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate and write one graph CSV per replicate.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Spectral measures of fresh or stored graphs.
    Spectrum {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        spec: KindArgs,
        /// Number of top atoms; the full spectrum when omitted.
        #[arg(long)]
        top: Option<usize>,
        /// Read graph_r*.csv from this directory instead of simulating.
        #[arg(long)]
        from: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Oracle tables.
    Oracle {
        #[arg(long, value_parser = parse_target)]
        what: OracleTarget,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Truncation N of the discrete operator.
        #[arg(long = "trunc-N", default_value_t = 2000)]
        trunc_n: usize,
        /// Nyström grid size.
        #[arg(long, default_value_t = 4000)]
        grid: usize,
        /// Right end of the Nyström domain.
        #[arg(long = "T", default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
        /// System size for the edge law.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Sem::Remove)]
        semantics: Sem,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate, take spectra and compare with the finite-n and limit oracles.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        spec: KindArgs,
        #[arg(long, default_value_t = 3)]
        ranks: usize,
        /// Score against the exact law of other semantics.
        #[arg(long, value_enum)]
        oracle_semantics: Option<Sem>,
        /// Use the empirical means as the finite-n oracle.
        #[arg(long)]
        self_check: bool,
        #[command(flatten)]
        gates: GateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Comparison over a grid of system sizes.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        spec: KindArgs,
        /// Comma-separated ascending sizes; overrides --n.
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        ranks: usize,
        #[command(flatten)]
        gates: GateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Degree sequences and their power-law fit.
    Degrees {
        #[command(flatten)]
        sim: SimArgs,
        /// Width of the fit window in decades around the log-midpoint.
        #[arg(long, default_value_t = 2.0)]
        decades: f64,
        #[command(flatten)]
        gates: GateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Re-run the spec stored in a manifest.
    Replay {
        manifest: PathBuf,
        #[command(flatten)]
        gates: GateArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sem {
    Remove,
    Stay,
    Freeze,
}

impl From<Sem> for LeakSemantics {
    fn from(s: Sem) -> Self {
        match s {
            Sem::Remove => LeakSemantics::Remove,
            Sem::Stay => LeakSemantics::Stay,
            Sem::Freeze => LeakSemantics::Freeze,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Unitwise,
    Global,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Mu,
    Kappa,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Sem::Remove)]
    semantics: Sem,
    #[arg(long, value_enum, default_value_t = EngineArg::Unitwise)]
    engine: EngineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SimArgs {
    fn config(&self) -> SimulationConfig {
        SimulationConfig {
            engine: match self.engine {
                EngineArg::Unitwise => Engine::Unitwise,
                EngineArg::Global => Engine::Global,
                EngineArg::Poisson => Engine::Poisson,
            },
            replicates: self.replicates,
            threads: self.threads,
            ..SimulationConfig::new(self.n, self.alpha, self.semantics.into(), self.seed)
        }
    }
}

#[derive(Args)]
struct KindArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Exponent a of ε = n^(-a), as a decimal or a ratio like 3/4. Required for kappa.
    #[arg(long)]
    eps_exponent: Option<String>,
}

impl KindArgs {
    fn resolve(&self) -> Result<(SpectralKind, Option<EpsSchedule>), Error> {
        let schedule = self
            .eps_exponent
            .as_deref()
            .map(str::parse::<EpsSchedule>)
            .transpose()?;
        match self.kind {
            KindArg::Mu => Ok((SpectralKind::Mu, schedule)),
            KindArg::Kappa if schedule.is_none() => Err(Error::Domain("--kind kappa needs --eps-exponent".into())),
            KindArg::Kappa => Ok((SpectralKind::Kappa, schedule)),
        }
    }
}

#[derive(Args)]
struct GateArgs {
    /// Gate file; the built-in thresholds when omitted.
    #[arg(long)]
    gates: Option<PathBuf>,
}

impl GateArgs {
    fn load(&self) -> Result<Gates, Error> {
        match &self.gates {
            Some(path) => Gates::load(path),
            None => Ok(Gates::default()),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory (else $WTA_OUT_DIR, else ./wta-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_target(s: &str) -> Result<OracleTarget, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(cli: Cli) -> Result<RunOutcome, Error> {
    let (spec, gates, out) = match cli.command {
        Cmd::Replay { manifest, gates, out } => {
            let dir = output_dir(out.out, "wta-out");
            return replay(&manifest, &dir, &gates.load()?).map(|o| report(o, &dir));
        }
        Cmd::Simulate { sim, out } => (
            RunSpec {
                command: Command::Simulate,
                config: Some(sim.config()),
                schedule: None,
            },
            Gates::default(),
            out,
        ),
        Cmd::Spectrum {
            sim,
            spec,
            top,
            from,
            out,
        } => {
            let (kind, schedule) = spec.resolve()?;
            let solver = top.map_or(Solver::Dense, Solver::Top);
            (
                RunSpec {
                    command: Command::Spectrum {
                        kind,
                        solver,
                        input: from.clone(),
                    },
                    config: from.is_none().then(|| sim.config()),
                    schedule,
                },
                Gates::default(),
                out,
            )
        }
        Cmd::Oracle {
            what,
            count,
            trunc_n,
            grid,
            cutoff,
            n,
            semantics,
            out,
        } => (
            RunSpec {
                command: Command::Oracle(OracleRequest {
                    what,
                    count,
                    truncation: trunc_n,
                    grid,
                    cutoff,
                    n,
                    semantics: semantics.into(),
                }),
                config: None,
                schedule: None,
            },
            Gates::default(),
            out,
        ),
        Cmd::Compare {
            sim,
            spec,
            ranks,
            oracle_semantics,
            self_check,
            gates,
            out,
        } => {
            let (kind, schedule) = spec.resolve()?;
            (
                RunSpec {
                    command: Command::Compare {
                        kind,
                        ranks,
                        oracle_semantics: oracle_semantics.map(Into::into),
                        self_check,
                    },
                    config: Some(sim.config()),
                    schedule,
                },
                gates.load()?,
                out,
            )
        }
        Cmd::Sweep {
            sim,
            spec,
            n_grid,
            ranks,
            gates,
            out,
        } => {
            let (kind, schedule) = spec.resolve()?;
            let config = SimulationConfig {
                n: n_grid[0],
                ..sim.config()
            };
            (
                RunSpec {
                    command: Command::Sweep { kind, ranks, n_grid },
                    config: Some(config),
                    schedule,
                },
                gates.load()?,
                out,
            )
        }
        Cmd::Degrees {
            sim,
            decades,
            gates,
            out,
        } => (
            RunSpec {
                command: Command::Degrees { decades },
                config: Some(sim.config()),
                schedule: None,
            },
            gates.load()?,
            out,
        ),
    };
    let dir = output_dir(out.out, "wta-out");
    execute(&spec, &dir, &gates).map(|o| report(o, &dir))
}

fn report(outcome: RunOutcome, dir: &std::path::Path) -> RunOutcome {
    for file in &outcome.manifest.outputs {
        println!("wrote {}", dir.join(file).display());
    }
    for gate in &outcome.gates {
        println!("{}", gate.line());
    }
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) if outcome.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e @ Error::Numeric { .. }) => {
            eprintln!("wta: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("wta: {e}");
            ExitCode::from(2)
        }
    }
}
